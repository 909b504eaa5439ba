#pragma once

#include <complex>

#include <Eigen/Dense>

namespace gmrf::fft {

/// Unnormalized 2-D DFT with the +i sign convention:
///   out[i,j] = sum_{k,l} in[k,l] * exp(+2*pi*i*(k*i/p1 + l*j/p2)).
/// Backed by FFTW with a process-wide plan cache; safe to call concurrently.
Eigen::MatrixXcd dft2(const Eigen::MatrixXcd& in);

/// Inverse of dft2 up to the 1/(p1*p2) factor (the -i sign transform).
Eigen::MatrixXcd dft2_conj(const Eigen::MatrixXcd& in);

Eigen::MatrixXcd dft2(const Eigen::MatrixXd& in);

} // namespace gmrf::fft
