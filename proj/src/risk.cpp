#include "gmrf/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmrf/parallel.hpp"
#include "gmrf/spectral.hpp"

namespace gmrf {

double loss_torus(const ThetaField& theta1, const ThetaField& theta2, const ThetaField& truth) {
    const auto& lat = truth.lattice;
    if (theta1.lattice.p1 != lat.p1 || theta1.lattice.p2 != lat.p2 ||
        theta2.lattice.p1 != lat.p1 || theta2.lattice.p2 != lat.p2)
        throw ConfigError("loss_torus: lattice mismatch");
    EigenGrid gt = dft2_eigenvalues(lat, truth.coeffs);
    if (1.0 - gt.max() <= 0) throw NumericError("loss_torus: invalid truth (max lambda >= 1)");
    EigenGrid g1 = dft2_eigenvalues(lat, theta1.coeffs);
    EigenGrid g2 = dft2_eigenvalues(lat, theta2.coeffs);
    Eigen::ArrayXXd diff = g1.values.array() - g2.values.array();
    Eigen::ArrayXXd sig = truth.sigma2 / (1.0 - gt.values.array());
    return (diff.square() * sig).sum() / lat.size();
}

PlaneLossEvaluator::PlaneLossEvaluator(const CorrelationModel& truth, const LatticeSpec& window,
                                       std::optional<AnisotropySpec> aniso, int max_window) {
    if (window.toroidal) throw ConfigError("PlaneLossEvaluator: non-toroidal window required");
    truth.validate();
    int w1 = window.p1, w2 = window.p2;
    truncated_ = w1 > max_window || w2 > max_window;
    if (truncated_) {
        w1 = std::min(w1, max_window);
        w2 = std::min(w2, max_window);
    }
    pwin_ = LatticeSpec(w1, w2, false);
    ci_ = w1 / 2;
    cj_ = w2 / 2;

    auto build = [&](int a1, int a2, Eigen::MatrixXd* sigma_rest, Eigen::VectorXd* best,
                     std::vector<int>* index_of) {
        const int N = a1 * a2, c0 = (a1 / 2) * a2 + (a2 / 2);
        Eigen::MatrixXd table(2 * a1 - 1, 2 * a2 - 1);
        for (int di = -(a1 - 1); di <= a1 - 1; ++di)
            for (int dj = -(a2 - 1); dj <= a2 - 1; ++dj)
                table(di + a1 - 1, dj + a2 - 1) = correlation_value(truth, di, dj, aniso);
        Eigen::MatrixXd S(N, N);
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                S(a, b) = table(b / a2 - a / a2 + a1 - 1, b % a2 - a % a2 + a2 - 1);
        if (index_of) index_of->assign(N, -1);
        Eigen::MatrixXd R(N - 1, N - 1);
        Eigen::VectorXd c(N - 1);
        int r = 0;
        for (int a = 0; a < N; ++a) {
            if (a == c0) continue;
            if (index_of) (*index_of)[a] = r;
            c(r) = S(a, c0);
            int q = 0;
            for (int b = 0; b < N; ++b) {
                if (b == c0) continue;
                R(r, q++) = S(a, b);
            }
            ++r;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(R);
        if (ldlt.info() != Eigen::Success)
            throw NumericError("PlaneLossEvaluator: singular window covariance");
        Eigen::VectorXd a_star = ldlt.solve(c);
        if (sigma_rest) *sigma_rest = std::move(R);
        if (best) *best = a_star;
        // Residual variance of the best predictor.
        return S(c0, c0) - c.dot(a_star);
    };

    double resid = build(w1, w2, &sigma_rest_, &best_, &index_of_);
    if (truncated_ && w1 > 4 && w2 > 4) {
        double resid_smaller = build(w1 - 4, w2 - 4, nullptr, nullptr, nullptr);
        truncation_gap_ = std::abs(resid_smaller - resid);
    }
}

double PlaneLossEvaluator::loss(const StencilCoeffs& theta_hat) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(sigma_rest_.rows());
    for (size_t k = 0; k < theta_hat.size(); ++k) {
        const auto& o = theta_hat.offsets[k];
        if (theta_hat.values[k] == 0.0) continue;
        int i = ci_ + o.di, j = cj_ + o.dj;
        if (i < 0 || i >= pwin_.p1 || j < 0 || j >= pwin_.p2)
            throw ConfigError("PlaneLossEvaluator: estimate support exceeds predictor window");
        int idx = index_of_[i * pwin_.p2 + j];
        if (idx < 0) throw ConfigError("PlaneLossEvaluator: estimate places mass at the center");
        v(idx) += theta_hat.values[k];
    }
    v -= best_;
    return v.dot(sigma_rest_ * v);
}

RiskEstimate summarize_losses(std::vector<double> losses, int failures) {
    RiskEstimate r;
    r.failures = failures;
    r.reps = static_cast<int>(losses.size());
    r.per_rep_losses = losses;
    if (losses.empty()) {
        r.mean = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    // Sorted reduction keeps the floating-point total independent of the
    // replication execution order.
    std::sort(losses.begin(), losses.end());
    double total = 0.0;
    for (double v : losses) total += v;
    r.mean = total / losses.size();
    double ss = 0.0;
    for (double v : losses) ss += (v - r.mean) * (v - r.mean);
    double sd = losses.size() > 1 ? std::sqrt(ss / (losses.size() - 1)) : 0.0;
    r.ci95_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(losses.size()));
    return r;
}

RiskEstimate monte_carlo_risk(const McTask& task, int reps, uint64_t seed) {
    if (reps < 2) throw ConfigError("monte_carlo_risk: reps must be >= 2");
    std::vector<double> losses(reps, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> failed(reps, 0);
    parallel_for(reps, [&](int rep) {
        try {
            FieldObservations obs = task.simulate(seed, rep);
            losses[rep] = task.loss_of_estimate(obs, rep);
        } catch (const Error&) {
            failed[rep] = 1;
        }
    });
    std::vector<double> kept;
    int failures = 0;
    for (int r = 0; r < reps; ++r) {
        if (failed[r]) ++failures;
        else kept.push_back(losses[r]);
    }
    return summarize_losses(std::move(kept), failures);
}

std::pair<int, double> oracle_and_ratio(const std::vector<RiskEstimate>& per_model,
                                        const RiskEstimate& selected) {
    if (per_model.empty()) throw ConfigError("oracle_and_ratio: empty risk map");
    int best = 0;
    for (size_t k = 1; k < per_model.size(); ++k)
        if (per_model[k].mean < per_model[best].mean) best = static_cast<int>(k);
    double oracle = per_model[best].mean;
    double ratio = oracle == 0.0 ? std::numeric_limits<double>::infinity()
                                 : selected.mean / oracle;
    return {best, ratio};
}

} // namespace gmrf
