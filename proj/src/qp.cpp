#include "gmrf/qp.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "gmrf/errors.hpp"

namespace gmrf {

namespace {

// Solve the equality-constrained QP on the working set W:
//   min 0.5 x'Qx + c'x  s.t.  G_W x = h_W.
// Returns x and the multipliers for W.
void solve_eq_kkt(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                  const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  const std::vector<int>& W, Eigen::VectorXd& x, Eigen::VectorXd& mu) {
    const int n = static_cast<int>(Q.rows());
    const int m = static_cast<int>(W.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = Q;
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -c;
    for (int k = 0; k < m; ++k) {
        K.block(0, n + k, n, 1) = G.row(W[k]).transpose();
        K.block(n + k, 0, 1, n) = G.row(W[k]);
        rhs(n + k) = h(W[k]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible())
        throw NumericError("active-set QP: singular KKT system (degenerate constraints)");
    Eigen::VectorXd sol = lu.solve(rhs);
    x = sol.head(n);
    mu = sol.tail(m);
}

} // namespace

QpResult solve_qp_activeset(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                            const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                            const Eigen::VectorXd& x0, double tol, int max_iter) {
    const int n = static_cast<int>(Q.rows());
    const int m = static_cast<int>(G.rows());
    QpResult res;
    res.x = x0;
    std::vector<int> W; // working set, kept sorted for determinism

    for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
        Eigen::VectorXd xs, mu;
        solve_eq_kkt(Q, c, G, h, W, xs, mu);
        Eigen::VectorXd step = xs - res.x;

        if (step.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, res.x.lpNorm<Eigen::Infinity>())) {
            // Stationary on W; check multipliers.
            int drop = -1;
            double most_negative = -tol;
            for (int k = 0; k < static_cast<int>(W.size()); ++k)
                if (mu(k) < most_negative) {
                    most_negative = mu(k);
                    drop = k;
                }
            if (drop < 0) {
                res.x = xs;
                res.active_count = static_cast<int>(W.size());
                // KKT residual: stationarity of the Lagrangian.
                Eigen::VectorXd grad = Q * res.x + c;
                for (int k = 0; k < static_cast<int>(W.size()); ++k)
                    grad += mu(k) * G.row(W[k]).transpose();
                res.kkt_residual = grad.lpNorm<Eigen::Infinity>();
                res.converged = true;
                return res;
            }
            W.erase(W.begin() + drop);
            continue;
        }

        // Step toward xs, stopping at the nearest violated constraint.
        double alpha = 1.0;
        int blocking = -1;
        for (int r = 0; r < m; ++r) {
            if (std::binary_search(W.begin(), W.end(), r)) continue;
            double dir = G.row(r).dot(step);
            if (dir <= tol) continue;
            double slack = h(r) - G.row(r).dot(res.x);
            double a = slack / dir;
            if (a < alpha - 1e-14) {
                alpha = a;
                blocking = r;
            }
        }
        res.x += std::max(alpha, 0.0) * step;
        if (blocking >= 0) {
            W.insert(std::lower_bound(W.begin(), W.end(), blocking), blocking);
            if (static_cast<int>(W.size()) > n)
                throw NumericError("active-set QP: working set exceeded dimension");
        }
    }
    res.active_count = static_cast<int>(W.size());
    res.converged = false;
    Eigen::VectorXd grad = Q * res.x + c;
    res.kkt_residual = grad.lpNorm<Eigen::Infinity>();
    return res;
}

} // namespace gmrf
