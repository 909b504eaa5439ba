#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmrf/params.hpp"
#include "gmrf/rng.hpp"

namespace gmrf {

enum class CorrelationFamily { exponential, circular, spherical, matern };

std::string family_name(CorrelationFamily f);
CorrelationFamily family_from_name(const std::string& name);

/// Parametric correlation function on the plane. `range` is the correlation
/// range r; `kappa` the Matern smoothness; `variance` is var X[0,0].
struct CorrelationModel {
    CorrelationFamily family = CorrelationFamily::exponential;
    double range = 1.0;
    double kappa = 0.5; // matern only
    double variance = 1.0;

    void validate() const;
};

/// Geometric anisotropy: distances are measured after rotating by `rotation`
/// and multiplying the second axis by `ratio` (>= 1), so `ratio` is the ratio
/// between maximum and minimum correlation ranges.
struct AnisotropySpec {
    double ratio = 1.0;
    double rotation = 0.0;

    void validate() const {
        if (ratio < 1.0) throw ConfigError("AnisotropySpec: ratio must be >= 1");
    }
};

/// n replications of the observed field on the window.
struct FieldObservations {
    LatticeSpec lattice;
    std::vector<Eigen::MatrixXd> data; // n matrices of size p1 x p2

    int n() const { return static_cast<int>(data.size()); }
};

/// The disc test parameter: theta[i,j] = phi on 0 < |(i,j)|_t <= sqrt(17),
/// zero elsewhere; sigma2 = 1, isotropic.
ThetaField make_theta_phi(double phi, const LatticeSpec& lattice);

/// Exact sampler for N(0, sigma2 (I - C(theta))^-1) on a torus by spectral
/// synthesis: Fourier coefficients with variances sigma2/(1 - lambda[i,j])
/// and conjugate symmetry, then an inverse FFT.
class TorusSampler {
public:
    explicit TorusSampler(const ThetaField& theta);
    Eigen::MatrixXd draw(Rng& rng) const;
    const LatticeSpec& lattice() const { return lattice_; }

private:
    LatticeSpec lattice_;
    Eigen::MatrixXd sd_; // sqrt(sigma2 / (1 - lambda))
};

/// Draws n fields; replication k uses substream first_stream + k of `seed`.
FieldObservations sample_torus_gmrf(const ThetaField& theta, int n, uint64_t seed,
                                    uint64_t first_stream = 0);

/// Correlation at a (possibly anisotropy-transformed) real offset.
double correlation_value(const CorrelationModel& model, double di, double dj,
                         const std::optional<AnisotropySpec>& aniso = {});

/// Modified Bessel function of the second kind, K_nu(x), nu in (0, 10],
/// x in (1e-6, 50].
double bessel_k(double nu, double x);

/// Exact sampler for a stationary Gaussian field on a plane window with the
/// given correlation: dense symmetric factorization for p1*p2 <= 2500,
/// circulant embedding on a padded torus beyond that.
class PlaneSampler {
public:
    PlaneSampler(const CorrelationModel& model, const LatticeSpec& window,
                 std::optional<AnisotropySpec> aniso = {});
    Eigen::MatrixXd draw(Rng& rng) const;
    const LatticeSpec& window() const { return window_; }
    bool used_embedding() const { return embedding_ != nullptr; }

private:
    struct Embedding {
        LatticeSpec torus;
        Eigen::MatrixXd sd; // sqrt of spectral mass per frequency
    };
    LatticeSpec window_;
    Eigen::MatrixXd factor_; // dense path: Sigma = factor * factor^T
    std::unique_ptr<Embedding> embedding_;
};

FieldObservations sample_plane_window(const CorrelationModel& model, const LatticeSpec& window,
                                      int n, std::optional<AnisotropySpec> aniso, uint64_t seed,
                                      uint64_t first_stream = 0);

} // namespace gmrf
