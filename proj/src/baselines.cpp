#include "gmrf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "gmrf/fft.hpp"

namespace gmrf {

namespace {

Eigen::MatrixXd class_eigen_rows(const NeighborhoodModel& m, bool iso, const LatticeSpec& lat) {
    const auto& classes = m.classes(iso);
    Eigen::MatrixXd L(classes.size(), lat.size());
    for (size_t c = 0; c < classes.size(); ++c) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(lat.p1, lat.p2);
        for (const auto& o : classes[c]) b(lat.wrap_row(o.di), lat.wrap_col(o.dj)) = 1.0;
        EigenGrid g = dft2_eigenvalues(lat, b);
        L.row(c) = Eigen::Map<const Eigen::RowVectorXd>(g.values.data(), lat.size());
    }
    return L;
}

struct BfgsOutcome {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Plain BFGS with Armijo backtracking; the line search rejects infeasible
// points so iterates stay inside the admissible region.
BfgsOutcome bfgs_minimize(const Eigen::VectorXd& x0,
                          const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& fg,
                          const std::function<bool(const Eigen::VectorXd&)>& feasible,
                          double grad_tol = 1e-6, int max_iter = 200) {
    const int n = static_cast<int>(x0.size());
    BfgsOutcome out;
    out.x = x0;
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n);
    out.f = fg(out.x, &g);
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        if (g.lpNorm<Eigen::Infinity>() <= grad_tol) {
            out.converged = true;
            return out;
        }
        Eigen::VectorXd dir = -H * g;
        if (dir.dot(g) >= 0) {
            H.setIdentity();
            dir = -g;
        }
        double alpha = 1.0;
        const double slope = g.dot(dir);
        double f_new = 0.0;
        Eigen::VectorXd x_new;
        bool ok = false;
        while (alpha > 1e-14) {
            x_new = out.x + alpha * dir;
            if (feasible(x_new)) {
                f_new = fg(x_new, nullptr);
                if (f_new <= out.f + 1e-4 * alpha * slope) {
                    ok = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!ok) return out; // stuck; caller inspects convergence flag
        Eigen::VectorXd g_new(n);
        fg(x_new, &g_new);
        Eigen::VectorXd s = x_new - out.x, y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            Eigen::VectorXd Hy = H * y;
            H += ((sy + y.dot(Hy)) / (sy * sy)) * (s * s.transpose()) -
                 (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        out.x = x_new;
        out.f = f_new;
        g = g_new;
    }
    return out;
}

} // namespace

double torus_loglik(const ThetaField& theta, const FieldObservations& obs) {
    const auto& lat = theta.lattice;
    if (!lat.toroidal) throw ConfigError("torus_loglik: toroidal lattice required");
    if (lat.p1 != obs.lattice.p1 || lat.p2 != obs.lattice.p2)
        throw ConfigError("torus_loglik: theta/data lattice mismatch");
    EigenGrid g = dft2_eigenvalues(lat, theta.coeffs);
    if (1.0 - g.max() <= 0)
        throw NumericError("torus_loglik: invalid theta (max lambda >= 1)");
    PeriodogramCache cache = PeriodogramCache::build(obs);
    const double n = obs.n(), P = lat.size();
    const Eigen::ArrayXXd one_minus = 1.0 - g.values.array();
    double quad = (one_minus * cache.S.array()).sum() / P;
    double logdet_term = one_minus.log().sum();
    return -0.5 * n * P * std::log(2.0 * M_PI * theta.sigma2) + 0.5 * n * logdet_term -
           quad / (2.0 * theta.sigma2);
}

LoglikResult fit_mle(const NeighborhoodModel& m, const FieldObservations& obs, bool iso) {
    return fit_mle(m, PeriodogramCache::build(obs), iso);
}

LoglikResult fit_mle(const NeighborhoodModel& m, const PeriodogramCache& cache, bool iso) {
    const auto& lat = cache.lattice;
    if (!lat.toroidal) throw ConfigError("fit_mle: toroidal lattice required");
    const int d = m.dim(iso);
    const double n = cache.n, P = lat.size();
    const Eigen::VectorXd w =
        Eigen::Map<const Eigen::VectorXd>(cache.S.data(), lat.size()) / P;

    LoglikResult out;
    out.model = m;
    if (d == 0) {
        double s2 = w.sum() / (n * P);
        out.sigma2_hat = s2;
        out.theta = ThetaField(lat, s2, iso);
        out.loglik = -0.5 * n * P * (std::log(2.0 * M_PI * s2) + 1.0);
        return out;
    }

    Eigen::MatrixXd L = class_eigen_rows(m, iso, lat);
    const double margin = 1e-8;
    auto lambda_of = [&](const Eigen::VectorXd& t) { return (L.transpose() * t).eval(); };
    auto feasible = [&](const Eigen::VectorXd& t) {
        return lambda_of(t).maxCoeff() < 1.0 - margin;
    };
    // Per-site negative profile log-likelihood (sigma2 maximized analytically):
    //   f(t) = (log(2 pi s2(t)) + 1)/2 - sum log(1 - lambda)/2P.
    auto fg = [&](const Eigen::VectorXd& t, Eigen::VectorXd* grad) {
        Eigen::ArrayXd one_minus = 1.0 - lambda_of(t).array();
        double s2 = (one_minus * w.array()).sum() / (n * P);
        double f = 0.5 * (std::log(2.0 * M_PI * s2) + 1.0) - one_minus.log().sum() / (2.0 * P);
        if (grad) {
            Eigen::VectorXd ds2 = -(L * w) / (n * P);
            Eigen::VectorXd dlog = L * one_minus.inverse().matrix();
            *grad = ds2 / (2.0 * s2) + dlog / (2.0 * P);
        }
        return f;
    };
    BfgsOutcome o =
        bfgs_minimize(Eigen::VectorXd::Zero(d), fg, feasible, 1e-6, 300);
    out.converged = o.converged;
    out.iterations = o.iterations;
    Eigen::ArrayXd one_minus = 1.0 - lambda_of(o.x).array();
    double s2 = (one_minus * w.array()).sum() / (n * P);
    out.sigma2_hat = s2;
    out.loglik = -0.5 * n * P * (std::log(2.0 * M_PI * s2) + 1.0) +
                 0.5 * n * one_minus.log().sum();
    ThetaField theta(lat, s2, iso);
    const auto& classes = m.classes(iso);
    for (int c = 0; c < d; ++c)
        for (const auto& off : classes[c])
            theta.coeffs(lat.wrap_row(off.di), lat.wrap_col(off.dj)) = o.x(c);
    out.theta = std::move(theta);
    return out;
}

std::pair<int, LoglikResult> aic_bic_select(const FieldObservations& obs,
                                            std::span<const NeighborhoodModel> collection,
                                            bool iso, InfoCriterion crit) {
    if (collection.empty()) throw ConfigError("aic_bic_select: empty collection");
    PeriodogramCache cache = PeriodogramCache::build(obs);
    const double c =
        crit == InfoCriterion::aic ? 2.0 : std::log(static_cast<double>(obs.lattice.size()));
    int best = -1;
    double best_val = std::numeric_limits<double>::infinity();
    LoglikResult best_fit;
    for (size_t k = 0; k < collection.size(); ++k) {
        LoglikResult f = fit_mle(collection[k], cache, iso);
        double v = -2.0 * f.loglik + c * collection[k].dim(iso);
        if (v < best_val) {
            best_val = v;
            best = static_cast<int>(k);
            best_fit = std::move(f);
        }
    }
    return {best, std::move(best_fit)};
}

VariogramBins empirical_variogram(const FieldObservations& obs, double max_lag, int n_bins,
                                  const std::optional<AnisotropySpec>& aniso) {
    if (obs.lattice.toroidal)
        throw ConfigError("empirical_variogram: non-toroidal window required");
    if (n_bins < 3) throw ConfigError("empirical_variogram: n_bins must be >= 3");
    if (max_lag <= 0) throw ConfigError("empirical_variogram: max_lag must be positive");
    const auto& lat = obs.lattice;
    const double width = max_lag / n_bins;
    std::vector<double> sum_root(n_bins, 0.0), sum_dist(n_bins, 0.0);
    std::vector<long> count(n_bins, 0);

    double c = 1.0, s = 0.0, ratio = 1.0;
    if (aniso) {
        aniso->validate();
        c = std::cos(aniso->rotation);
        s = std::sin(aniso->rotation);
        ratio = aniso->ratio;
    }
    auto pair_dist = [&](int di, int dj) {
        double u = c * di + s * dj;
        double v = ratio * (-s * di + c * dj);
        return std::hypot(u, v);
    };

    // Distances depend on the offset only; tabulate bin per offset once.
    const int P = lat.size();
    for (const auto& x : obs.data) {
        for (int a = 0; a < P; ++a) {
            const int i1 = a / lat.p2, j1 = a % lat.p2;
            for (int b = a + 1; b < P; ++b) {
                const int i2 = b / lat.p2, j2 = b % lat.p2;
                double dist = pair_dist(i2 - i1, j2 - j1);
                if (dist > max_lag) continue;
                int bin = std::min(static_cast<int>(dist / width), n_bins - 1);
                sum_root[bin] += std::sqrt(std::abs(x(i1, j1) - x(i2, j2)));
                sum_dist[bin] += dist;
                ++count[bin];
            }
        }
    }
    VariogramBins bins;
    for (int k = 0; k < n_bins; ++k) {
        if (count[k] == 0) {
            ++bins.dropped_bins;
            continue;
        }
        double mean_root = sum_root[k] / count[k];
        double two_gamma =
            std::pow(mean_root, 4.0) / (0.457 + 0.494 / static_cast<double>(count[k]));
        bins.lag.push_back(sum_dist[k] / count[k]);
        bins.semivariance.push_back(0.5 * two_gamma);
        bins.count.push_back(count[k]);
    }
    return bins;
}

namespace {

double model_semivariance(CorrelationFamily family, double lag, double range, double variance,
                          double kappa) {
    CorrelationModel m{family, range, kappa, 1.0};
    return variance * (1.0 - correlation_value(m, lag, 0.0));
}

} // namespace

VariogramFit fit_variogram_wls(const VariogramBins& bins, CorrelationFamily family,
                               std::optional<double> fix_kappa) {
    if (bins.size() < 3) throw ConfigError("fit_variogram_wls: need >= 3 nonempty bins");
    const bool free_kappa = family == CorrelationFamily::matern && !fix_kappa;
    const int npar = free_kappa ? 3 : 2;
    const double kappa_fixed =
        family == CorrelationFamily::matern ? fix_kappa.value_or(0.5) : 0.5;

    double sill_guess = *std::max_element(bins.semivariance.begin(), bins.semivariance.end());
    if (sill_guess <= 0) throw NumericError("fit_variogram_wls: degenerate (zero) variogram");

    auto gamma_model = [&](double lag, const Eigen::VectorXd& p) {
        double range = std::exp(p(0)), var = std::exp(p(1));
        double kap = free_kappa ? std::exp(p(2)) : kappa_fixed;
        return model_semivariance(family, lag, range, var, kap);
    };

    // Inner pass: fixed weights w_h, objective sum w_h (gamma_hat - gamma)^2
    // with numeric gradients on log parameters.
    auto make_objective = [&](const std::vector<double>& wts) {
        return [&, wts](const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
            auto value = [&](const Eigen::VectorXd& q) {
                double acc = 0.0;
                for (int k = 0; k < bins.size(); ++k) {
                    double r = bins.semivariance[k] - gamma_model(bins.lag[k], q);
                    acc += wts[k] * r * r;
                }
                return acc;
            };
            double f = value(p);
            if (grad) {
                grad->resize(p.size());
                for (int i = 0; i < p.size(); ++i) {
                    Eigen::VectorXd q = p;
                    const double h = 1e-6 * std::max(1.0, std::abs(p(i)));
                    q(i) = p(i) + h;
                    double fp = value(q);
                    q(i) = p(i) - h;
                    double fm = value(q);
                    (*grad)(i) = (fp - fm) / (2.0 * h);
                }
            }
            return f;
        };
    };
    auto always_feasible = [](const Eigen::VectorXd& p) {
        return p.lpNorm<Eigen::Infinity>() < 50.0; // keeps exp() finite
    };

    const double start_ranges[5] = {0.5, 1.0, 2.0, 4.0, 8.0};
    const double start_kappas[5] = {0.5, 0.25, 1.0, 2.0, 0.05};

    VariogramFit fit;
    fit.family = family;
    fit.bins = bins;
    if (family == CorrelationFamily::matern) fit.kappa_hat = kappa_fixed;

    Eigen::VectorXd best_p;
    std::vector<double> weights(bins.size());
    for (int k = 0; k < bins.size(); ++k) weights[k] = static_cast<double>(bins.count[k]);

    for (int round = 0; round < 20; ++round) {
        double best_f = std::numeric_limits<double>::infinity();
        Eigen::VectorXd round_best;
        bool any = false;
        auto obj = make_objective(weights);
        const int n_starts = (round == 0 || best_p.size() == 0) ? 5 : 1;
        for (int s = 0; s < n_starts; ++s) {
            Eigen::VectorXd p0(npar);
            if (n_starts == 1) {
                p0 = best_p;
            } else {
                p0(0) = std::log(start_ranges[s]);
                p0(1) = std::log(sill_guess);
                if (free_kappa) p0(2) = std::log(start_kappas[s]);
            }
            BfgsOutcome o = bfgs_minimize(p0, obj, always_feasible, 1e-10, 400);
            if (!std::isfinite(o.f)) continue;
            if (o.f < best_f) {
                best_f = o.f;
                round_best = o.x;
                any = true;
            }
        }
        if (!any) {
            fit.converged = false;
            break;
        }
        double change = best_p.size() ? (round_best - best_p).lpNorm<Eigen::Infinity>()
                                      : std::numeric_limits<double>::infinity();
        best_p = round_best;
        fit.reweight_rounds = round + 1;
        // Cressie weights for the next round: N_h / gamma_model^2.
        for (int k = 0; k < bins.size(); ++k) {
            double gm = std::max(gamma_model(bins.lag[k], best_p), 1e-12);
            weights[k] = static_cast<double>(bins.count[k]) / (gm * gm);
        }
        if (change < 1e-6) break;
    }
    if (best_p.size() == 0)
        throw NumericError("fit_variogram_wls: all starts diverged");
    fit.range_hat = std::exp(best_p(0));
    fit.variance_hat = std::exp(best_p(1));
    if (free_kappa) fit.kappa_hat = std::exp(best_p(2));
    return fit;
}

ThetaField kriging_theta(const VariogramFit& fit, int window,
                         const std::optional<AnisotropySpec>& aniso) {
    if (window < 3 || window % 2 == 0)
        throw ConfigError("kriging_theta: window must be odd and >= 3");
    const int half = window / 2;
    std::vector<Offset> offs;
    for (int i = -half; i <= half; ++i)
        for (int j = -half; j <= half; ++j)
            if (i != 0 || j != 0) offs.push_back({i, j});
    const int n = static_cast<int>(offs.size());
    CorrelationModel model = fit.model();

    Eigen::MatrixXd K(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b)
            K(a, b) = correlation_value(model, offs[a].di - offs[b].di,
                                        offs[a].dj - offs[b].dj, aniso);
        K(a, n) = 1.0;
        K(n, a) = 1.0;
        rhs(a) = correlation_value(model, offs[a].di, offs[a].dj, aniso);
    }
    K(n, n) = 0.0;
    rhs(n) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible())
        throw NumericError("kriging_theta: singular kriging system; try a smaller window");
    Eigen::VectorXd sol = lu.solve(rhs);

    ThetaField theta(LatticeSpec(window, window, false), 1.0, false);
    // Average conjugate pairs: the system is exactly symmetric, this removes
    // LU round-off so the central-symmetry invariant holds bitwise.
    for (int a = 0; a < n; ++a) {
        int b = -1;
        for (int q = 0; q < n; ++q)
            if (offs[q].di == -offs[a].di && offs[q].dj == -offs[a].dj) {
                b = q;
                break;
            }
        double v = 0.5 * (sol(a) + sol(b));
        theta.coeffs(theta.lattice.wrap_row(offs[a].di), theta.lattice.wrap_col(offs[a].dj)) = v;
    }
    // Kriging variance at the center (covariance form).
    double kv = correlation_value(model, 0, 0, aniso) - rhs.head(n).dot(sol.head(n)) - sol(n);
    theta.sigma2 = std::max(kv, 1e-12);
    return theta;
}

} // namespace gmrf
