#include "gmrf/params.hpp"

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "gmrf/fft.hpp"
#include "gmrf/spectral.hpp"

namespace gmrf {

StencilCoeffs ThetaField::to_stencil() const {
    StencilCoeffs s;
    for (int i = 0; i < lattice.p1; ++i)
        for (int j = 0; j < lattice.p2; ++j)
            if (coeffs(i, j) != 0.0)
                s.add({lattice.rep_row(i), lattice.rep_col(j)}, coeffs(i, j));
    return s;
}

void ThetaField::check_invariants(double tol) const {
    if (coeffs.rows() != lattice.p1 || coeffs.cols() != lattice.p2)
        throw ConfigError("ThetaField: coefficient shape does not match lattice");
    if (sigma2 <= 0) throw ConfigError("ThetaField: sigma2 must be positive");
    if (std::abs(coeffs(0, 0)) > tol) throw NumericError("ThetaField: theta[0,0] must be 0");
    for (int i = 0; i < lattice.p1; ++i)
        for (int j = 0; j < lattice.p2; ++j) {
            double a = coeffs(i, j);
            double b = coeffs(lattice.wrap_row(-i), lattice.wrap_col(-j));
            if (std::abs(a - b) > tol)
                throw NumericError("ThetaField: central symmetry violated at (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
        }
}

Eigen::MatrixXd build_circulant(const ThetaField& theta) {
    const auto& lat = theta.lattice;
    if (!lat.toroidal) throw ConfigError("build_circulant: toroidal lattice required");
    if (lat.size() > 4096)
        throw ConfigError("build_circulant: p1*p2 exceeds the 4096 oracle-scale guard");
    const int n = lat.size();
    Eigen::MatrixXd C(n, n);
    for (int i1 = 0; i1 < lat.p1; ++i1)
        for (int j1 = 0; j1 < lat.p2; ++j1)
            for (int i2 = 0; i2 < lat.p1; ++i2)
                for (int j2 = 0; j2 < lat.p2; ++j2)
                    C(i1 * lat.p2 + j1, i2 * lat.p2 + j2) =
                        theta.coeffs(lat.wrap_row(i2 - i1), lat.wrap_col(j2 - j1));
    return C;
}

Eigen::MatrixXd SpectralCovariance::covariance_function() const {
    Eigen::MatrixXcd f = fft::dft2_conj(Eigen::MatrixXcd(eigenvalues.cast<std::complex<double>>()));
    return f.real() / static_cast<double>(lattice.size());
}

Eigen::MatrixXd SpectralCovariance::dense() const {
    if (lattice.size() > 4096)
        throw ConfigError("SpectralCovariance::dense: oracle-scale guard exceeded");
    Eigen::MatrixXd cov = covariance_function();
    const int n = lattice.size();
    Eigen::MatrixXd S(n, n);
    for (int i1 = 0; i1 < lattice.p1; ++i1)
        for (int j1 = 0; j1 < lattice.p2; ++j1)
            for (int i2 = 0; i2 < lattice.p1; ++i2)
                for (int j2 = 0; j2 < lattice.p2; ++j2)
                    S(i1 * lattice.p2 + j1, i2 * lattice.p2 + j2) =
                        cov(lattice.wrap_row(i2 - i1), lattice.wrap_col(j2 - j1));
    return S;
}

SpectralCovariance covariance_from_theta(const ThetaField& theta) {
    EigenGrid g = dft2_eigenvalues(theta.lattice, theta.coeffs);
    const double min_gap = 1.0 - g.max();
    if (min_gap <= 0)
        throw NumericError("covariance_from_theta: invalid theta, min(1-lambda) = " +
                           std::to_string(min_gap));
    SpectralCovariance cov{theta.lattice, theta.sigma2, {}};
    cov.eigenvalues = (theta.sigma2 / (1.0 - g.values.array())).matrix();
    return cov;
}

Eigen::MatrixXd project_symmetry(const Eigen::MatrixXd& raw, const LatticeSpec& lattice,
                                 bool iso) {
    if (raw.rows() != lattice.p1 || raw.cols() != lattice.p2)
        throw ConfigError("project_symmetry: shape mismatch");
    const bool transpose_ok = !lattice.toroidal || (lattice.p1 == lattice.p2);
    auto key = [&](int i, int j) {
        std::set<std::pair<int, int>> orb;
        auto add = [&](int a, int b) {
            orb.insert({lattice.wrap_row(a), lattice.wrap_col(b)});
        };
        int ri = lattice.rep_row(i), rj = lattice.rep_col(j);
        add(ri, rj);
        add(-ri, -rj);
        if (iso) {
            add(-ri, rj);
            add(ri, -rj);
            if (transpose_ok) {
                add(rj, ri);
                add(-rj, ri);
                add(rj, -ri);
                add(-rj, -ri);
            }
        }
        return orb;
    };
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(lattice.p1, lattice.p2);
    std::set<std::pair<int, int>> done;
    for (int i = 0; i < lattice.p1; ++i)
        for (int j = 0; j < lattice.p2; ++j) {
            if (done.count({i, j})) continue;
            auto orb = key(i, j);
            double mean = 0.0;
            for (const auto& [a, b] : orb) mean += raw(a, b);
            mean /= static_cast<double>(orb.size());
            for (const auto& [a, b] : orb) {
                out(a, b) = mean;
                done.insert({a, b});
            }
        }
    out(0, 0) = 0.0;
    return out;
}

} // namespace gmrf
