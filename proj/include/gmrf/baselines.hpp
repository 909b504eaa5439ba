#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gmrf/cls.hpp"
#include "gmrf/simulate.hpp"

namespace gmrf {

struct LoglikResult {
    ThetaField theta;
    double sigma2_hat = 1.0;
    double loglik = 0.0;
    NeighborhoodModel model;
    bool converged = true;
    int iterations = 0;
};

/// Exact Gaussian log-density of the n replications under
/// N(0, sigma2 (I - C(theta))^-1), computed spectrally.
double torus_loglik(const ThetaField& theta, const FieldObservations& obs);

/// Maximum likelihood over the model's parameter set: sigma2 profiled out
/// analytically, theta by BFGS with a feasibility margin on max lambda.
LoglikResult fit_mle(const NeighborhoodModel& m, const FieldObservations& obs, bool iso);
LoglikResult fit_mle(const NeighborhoodModel& m, const PeriodogramCache& cache, bool iso);

enum class InfoCriterion { aic, bic };

/// argmin over the collection of -2 loglik + c * dim, c = 2 (AIC) or
/// log(p1 p2) (BIC). Returns the winning index and its fit.
std::pair<int, LoglikResult> aic_bic_select(const FieldObservations& obs,
                                            std::span<const NeighborhoodModel> collection,
                                            bool iso, InfoCriterion crit);

struct VariogramBins {
    std::vector<double> lag;          // mean pair distance per bin
    std::vector<double> semivariance; // gamma-hat
    std::vector<long> count;          // pair count per bin
    int dropped_bins = 0;             // empty bins removed

    int size() const { return static_cast<int>(lag.size()); }
};

/// Hawkins-Cressie modulus estimator binned by (possibly anisotropy-
/// transformed) euclidean lag distance:
///   2 gamma(h) = (mean |X_s - X_t|^(1/2))^4 / (0.457 + 0.494/N_h).
VariogramBins empirical_variogram(const FieldObservations& obs, double max_lag, int n_bins,
                                  const std::optional<AnisotropySpec>& aniso = {});

struct VariogramFit {
    CorrelationFamily family = CorrelationFamily::exponential;
    double range_hat = 1.0;
    double variance_hat = 1.0;
    std::optional<double> kappa_hat;
    VariogramBins bins;
    bool converged = true;
    int reweight_rounds = 0;

    CorrelationModel model() const {
        return {family, range_hat, kappa_hat.value_or(0.5), variance_hat};
    }
};

/// Cressie's reweighted least squares: minimize sum_h w_h (gamma_hat -
/// gamma_model)^2 with w_h = N_h / gamma_model(prev)^2, iterated to a fixed
/// point; inner minimization by multi-start quasi-Newton on log parameters.
VariogramFit fit_variogram_wls(const VariogramBins& bins, CorrelationFamily family,
                               std::optional<double> fix_kappa = {});

/// Ordinary kriging weights for the center node of a window x window
/// neighborhood under the fitted covariance; returned as a parameter field
/// over that neighborhood (center weight 0, sigma2 = kriging variance).
ThetaField kriging_theta(const VariogramFit& fit, int window,
                         const std::optional<AnisotropySpec>& aniso = {});

} // namespace gmrf
