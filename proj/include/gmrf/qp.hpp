#pragma once

#include <Eigen/Dense>

namespace gmrf {

struct QpResult {
    Eigen::VectorXd x;
    int active_count = 0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Primal active-set solver for
///   minimize 0.5 x'Qx + c'x   subject to  G x <= h,
/// with Q symmetric positive definite and x0 feasible. Deterministic: adds the
/// most-violated blocking constraint, drops the most-negative multiplier.
QpResult solve_qp_activeset(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                            const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                            const Eigen::VectorXd& x0, double tol = 1e-8,
                            int max_iter = 500);

} // namespace gmrf
