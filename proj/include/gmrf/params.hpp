#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gmrf/lattice.hpp"

namespace gmrf {

/// Finite-support conditional-regression coefficients keyed by offset.
/// Used for plane-mode parameters (fields on Z^2 observed through a window).
struct StencilCoeffs {
    std::vector<Offset> offsets;
    std::vector<double> values;

    void add(const Offset& o, double v) {
        offsets.push_back(o);
        values.push_back(v);
    }
    size_t size() const { return offsets.size(); }
};

/// The conditional-regression parameter theta: a p1 x p2 coefficient matrix
/// with theta[0,0] = 0 and central symmetry theta[i,j] = theta[-i,-j]
/// (indices modulo the lattice), plus the conditional variance sigma2.
/// For plane windows the matrix stores a stencil by wrapped offsets; the
/// invariants are identical.
struct ThetaField {
    LatticeSpec lattice;
    Eigen::MatrixXd coeffs; // p1 x p2
    double sigma2 = 1.0;
    bool iso = false;

    ThetaField() = default;
    ThetaField(const LatticeSpec& lat, double s2, bool isotropic)
        : lattice(lat), coeffs(Eigen::MatrixXd::Zero(lat.p1, lat.p2)), sigma2(s2),
          iso(isotropic) {
        if (s2 <= 0) throw ConfigError("ThetaField: sigma2 must be positive");
    }

    double at_offset(int di, int dj) const {
        return coeffs(lattice.wrap_row(di), lattice.wrap_col(dj));
    }
    /// Writes value at (di,dj) and (-di,-dj).
    void set_offset_pair(int di, int dj, double v) {
        coeffs(lattice.wrap_row(di), lattice.wrap_col(dj)) = v;
        coeffs(lattice.wrap_row(-di), lattice.wrap_col(-dj)) = v;
    }

    /// Nonzero entries as representative offsets.
    StencilCoeffs to_stencil() const;

    /// Throws on violated invariants (nonzero center, broken symmetry).
    void check_invariants(double tol = 1e-12) const;
};

/// Constraints for the capped estimators: eigenvalues of I - C(theta) must
/// stay in (0, rho). min_gap shifts the validity check into the strict
/// interior (sampling needs it; estimation over closures does not).
struct ConstraintSpec {
    std::optional<double> rho;
    double min_gap = 0.0;

    ConstraintSpec() = default;
    explicit ConstraintSpec(std::optional<double> r, double gap = 0.0) : rho(r), min_gap(gap) {
        if (rho && *rho <= 2.0) throw ConfigError("ConstraintSpec: rho must exceed 2");
        if (min_gap < 0) throw ConfigError("ConstraintSpec: min_gap must be >= 0");
    }
};

/// Dense C(theta): the symmetric block-circulant matrix with
/// C[(i1,j1),(i2,j2)] = theta[i2-i1, j2-j1] (indices mod p1,p2).
/// Oracle-scale only (p1*p2 <= 4096).
Eigen::MatrixXd build_circulant(const ThetaField& theta);

/// Spectral form of Sigma = sigma2 * (I - C(theta))^-1 on a torus.
struct SpectralCovariance {
    LatticeSpec lattice;
    double sigma2 = 1.0;
    Eigen::MatrixXd eigenvalues; // sigma2 / (1 - lambda[i,j])

    /// Covariance at every offset: the inverse DFT of the eigenvalue grid.
    Eigen::MatrixXd covariance_function() const;
    /// Dense Sigma (oracle scale).
    Eigen::MatrixXd dense() const;
    double phi_max() const { return eigenvalues.maxCoeff(); }
};

SpectralCovariance covariance_from_theta(const ThetaField& theta);

/// Orthogonal projection of an arbitrary matrix onto the symmetric parameter
/// space (class-wise averaging); idempotent. Keeps [0,0] at zero.
Eigen::MatrixXd project_symmetry(const Eigen::MatrixXd& raw, const LatticeSpec& lattice,
                                 bool iso);

} // namespace gmrf
