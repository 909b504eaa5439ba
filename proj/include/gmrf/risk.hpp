#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "gmrf/params.hpp"
#include "gmrf/simulate.hpp"

namespace gmrf {

/// Monte Carlo risk with a normal-approximation 95% confidence interval.
struct RiskEstimate {
    double mean = 0.0;
    double ci95_halfwidth = 0.0;
    int reps = 0;
    std::vector<double> per_rep_losses;
    int failures = 0; // estimator failures, excluded from the mean
};

/// Prediction loss on a torus:
///   l(t1,t2) = 1/(p1 p2) tr[(C(t1)-C(t2)) Sigma (C(t1)-C(t2))]
/// evaluated spectrally under the truth's covariance.
double loss_torus(const ThetaField& theta1, const ThetaField& theta2, const ThetaField& truth);

/// Plane-window prediction loss: squared difference between the estimate's
/// linear prediction of the center node and the exact conditional expectation,
/// a quadratic form in the partitioned window covariance. The covariance and
/// the best-predictor coefficients are cached across evaluations; windows
/// larger than max_window are truncated to a centered sub-window for the
/// truth predictor.
class PlaneLossEvaluator {
public:
    PlaneLossEvaluator(const CorrelationModel& truth, const LatticeSpec& window,
                       std::optional<AnisotropySpec> aniso = {}, int max_window = 31);

    double loss(const StencilCoeffs& theta_hat) const;
    double loss(const ThetaField& theta_hat) const { return loss(theta_hat.to_stencil()); }

    int predictor_window() const { return pwin_.p1; }
    bool truncated() const { return truncated_; }
    /// Change in best-predictor residual variance at the last window shrink;
    /// a rough size of the truncation effect (0 when not truncated).
    double truncation_gap() const { return truncation_gap_; }

private:
    LatticeSpec pwin_;
    int ci_ = 0, cj_ = 0;          // center node within the predictor window
    Eigen::MatrixXd sigma_rest_;   // covariance of the non-center nodes
    Eigen::VectorXd best_;         // exact best-predictor coefficients
    std::vector<int> index_of_;    // window node -> row in sigma_rest_
    bool truncated_ = false;
    double truncation_gap_ = 0.0;
};

/// One replication: simulate -> estimate -> loss. Estimator exceptions are
/// recorded and excluded, never silently dropped.
struct McTask {
    std::function<FieldObservations(uint64_t seed, int rep)> simulate;
    std::function<double(const FieldObservations&, int rep)> loss_of_estimate;
};

RiskEstimate monte_carlo_risk(const McTask& task, int reps, uint64_t seed);

/// Summarize per-replication losses (already gathered) into a RiskEstimate.
RiskEstimate summarize_losses(std::vector<double> losses, int failures);

/// Oracle model (minimal mean risk) and the ratio selected/oracle; the ratio
/// is +infinity when the oracle risk is exactly zero.
std::pair<int, double> oracle_and_ratio(const std::vector<RiskEstimate>& per_model,
                                        const RiskEstimate& selected);

} // namespace gmrf
