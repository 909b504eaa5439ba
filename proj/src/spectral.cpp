#include "gmrf/spectral.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "gmrf/fft.hpp"

namespace gmrf {

EigenGrid dft2_eigenvalues(const LatticeSpec& lattice, const Eigen::MatrixXd& coeffs) {
    if (coeffs.rows() != lattice.p1 || coeffs.cols() != lattice.p2)
        throw ConfigError("dft2_eigenvalues: coefficient shape does not match lattice");
    if (coeffs(0, 0) != 0.0)
        throw NumericError("dft2_eigenvalues: theta[0,0] must be zero");

    const double scale = coeffs.cwiseAbs().maxCoeff();
    Eigen::MatrixXcd f = fft::dft2(coeffs);
    const double max_imag = f.imag().cwiseAbs().maxCoeff();
    // Real output only holds under central symmetry; find the offender if not.
    if (max_imag > 1e-10 * std::max(1.0, scale) * lattice.size()) {
        for (int i = 0; i < lattice.p1; ++i)
            for (int j = 0; j < lattice.p2; ++j) {
                double a = coeffs(i, j);
                double b = coeffs(lattice.wrap_row(-i), lattice.wrap_col(-j));
                if (std::abs(a - b) > 1e-10 * std::max(1.0, scale))
                    throw NumericError("dft2_eigenvalues: symmetry violated at offset (" +
                                       std::to_string(i) + "," + std::to_string(j) + "): " +
                                       std::to_string(a) + " vs " + std::to_string(b));
            }
        throw NumericError("dft2_eigenvalues: transform has imaginary mass " +
                           std::to_string(max_imag));
    }
    return EigenGrid{lattice, f.real()};
}

ValidityReport is_valid_torus(const ThetaField& theta, std::optional<double> rho,
                              double min_gap) {
    if (theta.sigma2 <= 0) throw ConfigError("is_valid_torus: sigma2 must be positive");
    EigenGrid g = dft2_eigenvalues(theta.lattice, theta.coeffs);
    ValidityReport r;
    r.min_one_minus_lambda = 1.0 - g.max();
    r.max_one_minus_lambda = 1.0 - g.min();
    r.valid = r.min_one_minus_lambda > min_gap;
    if (rho) r.valid = r.valid && r.max_one_minus_lambda < *rho - min_gap;
    return r;
}

std::vector<double> spectral_density_plane(const StencilCoeffs& coeffs,
                                           std::span<const std::array<double, 2>> omega) {
    std::vector<double> out;
    out.reserve(omega.size());
    for (const auto& w : omega) {
        double f = 1.0;
        for (size_t k = 0; k < coeffs.size(); ++k)
            f -= coeffs.values[k] * std::cos(coeffs.offsets[k].di * w[0] +
                                             coeffs.offsets[k].dj * w[1]);
        out.push_back(f);
    }
    return out;
}

double min_spectral_density_grid(const StencilCoeffs& coeffs, int resolution) {
    if (resolution < 2) throw ConfigError("min_spectral_density_grid: resolution too small");
    Eigen::MatrixXd pad = Eigen::MatrixXd::Zero(resolution, resolution);
    for (size_t k = 0; k < coeffs.size(); ++k) {
        const auto& o = coeffs.offsets[k];
        int i = o.di % resolution, j = o.dj % resolution;
        if (i < 0) i += resolution;
        if (j < 0) j += resolution;
        pad(i, j) += coeffs.values[k];
    }
    Eigen::MatrixXcd f = fft::dft2(pad);
    return 1.0 - f.real().maxCoeff();
}

double min_spectral_density_certified(const StencilCoeffs& coeffs, int resolution) {
    double lip = 0.0;
    for (size_t k = 0; k < coeffs.size(); ++k)
        lip += std::hypot(coeffs.offsets[k].di, coeffs.offsets[k].dj) *
               std::abs(coeffs.values[k]);
    return min_spectral_density_grid(coeffs, resolution) - 2.0 * M_PI * lip / resolution;
}

} // namespace gmrf
