#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmrf/params.hpp"

namespace gmrf {

/// Eigenvalues of the block-circulant C(theta), one per Fourier frequency:
/// lambda[i,j] = sum_{k,l} theta[k,l] cos(2*pi*(k*i/p1 + l*j/p2)).
struct EigenGrid {
    LatticeSpec lattice;
    Eigen::MatrixXd values; // p1 x p2

    double min() const { return values.minCoeff(); }
    double max() const { return values.maxCoeff(); }
};

/// 2-D DFT eigenvalue grid of a centrally symmetric coefficient matrix.
/// O(p1 p2 log(p1 p2)); errors if the symmetry is broken beyond tolerance
/// (the transform would leak imaginary mass into every quadratic form).
EigenGrid dft2_eigenvalues(const LatticeSpec& lattice, const Eigen::MatrixXd& coeffs);

struct ValidityReport {
    bool valid = false;
    double min_one_minus_lambda = 0.0;
    double max_one_minus_lambda = 0.0;
};

/// Valid iff max lambda < 1 (I - C(theta) positive definite) and, when rho is
/// given, max(1 - lambda) < rho. min_gap demands strict interior margin.
ValidityReport is_valid_torus(const ThetaField& theta, std::optional<double> rho = {},
                              double min_gap = 0.0);

/// Spectral density factor of a plane-mode parameter at given frequencies:
/// f(w) = 1 - sum_{(i,j)} theta[i,j] cos(i*w1 + j*w2).
std::vector<double> spectral_density_plane(const StencilCoeffs& coeffs,
                                           std::span<const std::array<double, 2>> omega);

/// Minimum of the plane spectral density over a uniform resolution x resolution
/// frequency grid (computed by zero-padded FFT).
double min_spectral_density_grid(const StencilCoeffs& coeffs, int resolution = 512);

/// Grid minimum adjusted by the Lipschitz safety margin
/// 2*pi*sum |(i,j)|*|theta[i,j]| / resolution; a positive result certifies
/// positivity on the continuum.
double min_spectral_density_certified(const StencilCoeffs& coeffs, int resolution = 512);

} // namespace gmrf
