#include "gmrf/cls.hpp"

#include <cmath>
#include <string>

#include "gmrf/fft.hpp"
#include "gmrf/qp.hpp"

namespace gmrf {

PeriodogramCache PeriodogramCache::build(const FieldObservations& obs) {
    if (obs.n() < 1) throw ConfigError("PeriodogramCache: empty dataset");
    PeriodogramCache c{obs.lattice, obs.n(), Eigen::MatrixXd::Zero(obs.lattice.p1, obs.lattice.p2)};
    for (const auto& x : obs.data) {
        if (x.rows() != obs.lattice.p1 || x.cols() != obs.lattice.p2)
            throw ConfigError("PeriodogramCache: observation shape mismatch");
        Eigen::MatrixXcd f = fft::dft2(x);
        c.S += f.cwiseAbs2();
    }
    return c;
}

double cls_direct(const Eigen::MatrixXd& coeffs, const FieldObservations& obs) {
    const auto& lat = obs.lattice;
    if (!lat.toroidal) throw ConfigError("cls_direct: toroidal lattice required");
    if (coeffs.rows() != lat.p1 || coeffs.cols() != lat.p2)
        throw ConfigError("cls_direct: coefficient shape mismatch");
    // Collect the support once; residuals are then O(support) per site.
    std::vector<std::tuple<int, int, double>> support;
    for (int i = 0; i < lat.p1; ++i)
        for (int j = 0; j < lat.p2; ++j)
            if (coeffs(i, j) != 0.0) support.emplace_back(i, j, coeffs(i, j));
    double total = 0.0;
    for (const auto& x : obs.data) {
        if (x.rows() != lat.p1 || x.cols() != lat.p2)
            throw ConfigError("cls_direct: observation shape mismatch");
        for (int i = 0; i < lat.p1; ++i)
            for (int j = 0; j < lat.p2; ++j) {
                double pred = 0.0;
                for (const auto& [di, dj, v] : support)
                    pred += v * x(lat.wrap_row(i + di), lat.wrap_col(j + dj));
                double r = x(i, j) - pred;
                total += r * r;
            }
    }
    return total / (static_cast<double>(obs.n()) * lat.size());
}

double cls_direct(const ThetaField& theta, const FieldObservations& obs) {
    if (theta.lattice.p1 != obs.lattice.p1 || theta.lattice.p2 != obs.lattice.p2)
        throw ConfigError("cls_direct: theta/data lattice mismatch");
    return cls_direct(theta.coeffs, obs);
}

double cls_fft(const Eigen::MatrixXd& coeffs, const PeriodogramCache& cache) {
    EigenGrid g = dft2_eigenvalues(cache.lattice, coeffs);
    const double p1 = cache.lattice.p1, p2 = cache.lattice.p2;
    double acc = ((1.0 - g.values.array()).square() * cache.S.array()).sum();
    return acc / (cache.n * p1 * p1 * p2 * p2);
}

double cls_fft(const Eigen::MatrixXd& coeffs, const FieldObservations& obs) {
    return cls_fft(coeffs, PeriodogramCache::build(obs));
}

namespace {

// Eigenvalue grids of the class indicator matrices: row c holds the flattened
// lambda grid of sum_{o in class c} e_o. The criterion becomes an explicit
// quadratic in the class coordinates.
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

ThetaField theta_from_classes(const NeighborhoodModel& m, bool iso, const LatticeSpec& lat,
                              const Eigen::VectorXd& t, double sigma2) {
    ThetaField theta(lat, std::max(sigma2, 1e-300), iso);
    const auto& classes = m.classes(iso);
    for (size_t c = 0; c < classes.size(); ++c)
        for (const auto& o : classes[c])
            theta.coeffs(lat.wrap_row(o.di), lat.wrap_col(o.dj)) = t(c);
    return theta;
}

// Representative half-grid frequencies (one per conjugate pair) to avoid
// duplicate constraint rows.
std::vector<int> half_grid_indices(const LatticeSpec& lat) {
    std::vector<int> idx;
    for (int i = 0; i < lat.p1; ++i)
        for (int j = 0; j < lat.p2; ++j) {
            int ii = lat.wrap_row(-i), jj = lat.wrap_col(-j);
            if (std::make_pair(i, j) <= std::make_pair(ii, jj)) idx.push_back(i * lat.p2 + j);
        }
    return idx;
}

} // namespace

FitResult fit_torus(const NeighborhoodModel& m, const FieldObservations& obs, bool iso,
                    const ConstraintSpec& constraint) {
    return fit_torus(m, PeriodogramCache::build(obs), iso, constraint);
}

FitResult fit_torus(const NeighborhoodModel& m, const PeriodogramCache& cache, bool iso,
                    const ConstraintSpec& constraint) {
    const auto& lat = cache.lattice;
    if (!lat.toroidal) throw ConfigError("fit_torus: toroidal lattice required");
    const int d = m.dim(iso);
    const double denom =
        static_cast<double>(cache.n) * lat.p1 * lat.p1 * lat.p2 * lat.p2;
    const Eigen::VectorXd s =
        Eigen::Map<const Eigen::VectorXd>(cache.S.data(), lat.size()) / denom;

    FitResult out;
    out.model = m;
    if (d == 0) {
        out.theta = theta_from_classes(m, iso, lat, Eigen::VectorXd(), s.sum());
        out.criterion = s.sum();
        return out;
    }
    if (s.maxCoeff() <= 0.0) throw NumericError("fit_torus: degenerate (all-zero) data");

    // Column-major flattening of the eigengrids matches the flattening of S.
    Eigen::MatrixXd L = class_eigen_rows(m, iso, lat);

    // gamma(t) = s.sum() - 2 b't + t'At with A = L diag(s) L', b = L s.
    Eigen::MatrixXd A = L * s.asDiagonal() * L.transpose();
    Eigen::VectorXd b = L * s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(es.eigenvalues().maxCoeff(), 1e-300))
        throw NumericError("fit_torus: singular normal equations (degenerate data), rank " +
                           std::to_string((es.eigenvalues().array() >
                                           1e-12 * es.eigenvalues().maxCoeff())
                                              .count()));
    Eigen::VectorXd t = es.eigenvectors() *
                        (es.eigenvectors().transpose() * b).cwiseQuotient(es.eigenvalues());

    // Feasibility: lambda(t) <= 1 everywhere, and >= 1 - rho under the cap.
    auto lambda_of = [&](const Eigen::VectorXd& tt) { return (L.transpose() * tt).eval(); };
    Eigen::VectorXd lam = lambda_of(t);
    bool feasible = lam.maxCoeff() <= 1.0 + 1e-12;
    if (constraint.rho) feasible = feasible && lam.minCoeff() >= 1.0 - *constraint.rho - 1e-12;

    if (!feasible) {
        auto half = half_grid_indices(lat);
        const int rows = static_cast<int>(half.size()) * (constraint.rho ? 2 : 1);
        Eigen::MatrixXd G(rows, d);
        Eigen::VectorXd h(rows);
        for (size_t k = 0; k < half.size(); ++k) {
            G.row(k) = L.col(half[k]).transpose();
            h(k) = 1.0;
        }
        if (constraint.rho)
            for (size_t k = 0; k < half.size(); ++k) {
                G.row(half.size() + k) = -L.col(half[k]).transpose();
                h(half.size() + k) = *constraint.rho - 1.0;
            }
        QpResult qp = solve_qp_activeset(2.0 * A, -2.0 * b, G, h,
                                         Eigen::VectorXd::Zero(d), 1e-8, 500);
        if (!qp.converged)
            throw NumericError("fit_torus: active-set QP did not converge");
        t = qp.x;
        out.on_boundary = qp.active_count > 0;
        out.kkt_residual = qp.kkt_residual;
    }

    lam = lambda_of(t);
    double crit = s.sum() - 2.0 * b.dot(t) + t.dot(A * t);
    out.theta = theta_from_classes(m, iso, lat, t, crit);
    out.criterion = crit;
    if (!out.on_boundary && lam.maxCoeff() > 1.0 - 1e-10) out.on_boundary = true;
    return out;
}

double cls_sublattice(const ThetaField& theta, const FieldObservations& obs,
                      const NeighborhoodModel& m, const Sublattice& sub) {
    const auto& lat = obs.lattice;
    if (lat.toroidal) throw ConfigError("cls_sublattice: non-toroidal lattice required");
    if (sub.nodes.empty()) throw ConfigError("cls_sublattice: empty sublattice");
    double total = 0.0;
    for (const auto& x : obs.data) {
        for (const auto& [i, j] : sub.nodes) {
            double pred = 0.0;
            for (const auto& o : m.offsets) {
                int a = i + o.di, bcol = j + o.dj;
                if (a < 0 || a >= lat.p1 || bcol < 0 || bcol >= lat.p2)
                    throw ConfigError("cls_sublattice: sublattice not contained in Lambda_m");
                pred += theta.at_offset(o.di, o.dj) * x(a, bcol);
            }
            double r = x(i, j) - pred;
            total += r * r;
        }
    }
    return total / (static_cast<double>(obs.n()) * sub.count());
}

FitResult fit_plane(const NeighborhoodModel& m, const FieldObservations& obs,
                    const Sublattice& sub, bool iso, int grid_resolution) {
    const auto& lat = obs.lattice;
    if (lat.toroidal) throw ConfigError("fit_plane: non-toroidal window required");
    if (sub.nodes.empty()) throw ConfigError("fit_plane: empty sublattice");
    const auto& classes = m.classes(iso);
    const int d = m.dim(iso);
    const long rows_total = static_cast<long>(obs.n()) * sub.count();

    FitResult out;
    out.model = m;
    out.sublattice = sub;
    if (d == 0) {
        double ss = 0.0;
        for (const auto& x : obs.data)
            for (const auto& [i, j] : sub.nodes) ss += x(i, j) * x(i, j);
        double crit = ss / rows_total;
        out.theta = ThetaField(lat, std::max(crit, 1e-300), iso);
        out.criterion = crit;
        return out;
    }

    // Class regressors R_c[s] = sum_{o in class} X[s + o]; the criterion is
    // quadratic in t with A = <R, R>, b = <R, y>.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    double c0 = 0.0;
    Eigen::VectorXd r(d);
    for (const auto& x : obs.data) {
        for (const auto& [i, j] : sub.nodes) {
            for (int c = 0; c < d; ++c) {
                double acc = 0.0;
                for (const auto& o : classes[c]) {
                    int a = i + o.di, bcol = j + o.dj;
                    if (a < 0 || a >= lat.p1 || bcol < 0 || bcol >= lat.p2)
                        throw ConfigError("fit_plane: sublattice not contained in Lambda_m");
                    acc += x(a, bcol);
                }
                r(c) = acc;
            }
            A.selfadjointView<Eigen::Lower>().rankUpdate(r);
            b += x(i, j) * r;
            c0 += x(i, j) * x(i, j);
        }
    }
    A = A.selfadjointView<Eigen::Lower>();
    A /= static_cast<double>(rows_total);
    b /= static_cast<double>(rows_total);
    c0 /= static_cast<double>(rows_total);

    out.non_unique = sub.count() < m.d_m || rows_total < d;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double emax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    const bool rank_deficient = es.eigenvalues().minCoeff() <= 1e-12 * emax;
    if (rank_deficient && rows_total >= d)
        throw NumericError("fit_plane: rank-deficient normal equations (degenerate data)");

    Eigen::VectorXd t;
    if (rank_deficient) {
        // Minimum-norm solution (pseudoinverse convention).
        Eigen::VectorXd inv = (es.eigenvalues().array() > 1e-12 * emax)
                                  .select(es.eigenvalues().array().inverse(), 0.0);
        t = es.eigenvectors() * (inv * (es.eigenvectors().transpose() * b).array()).matrix();
    } else {
        t = es.eigenvectors() *
            (es.eigenvectors().transpose() * b).cwiseQuotient(es.eigenvalues());
    }

    // Enforce spectral positivity on the frequency grid with cutting planes:
    // add the most-violated grid frequency and re-solve until clean.
    auto grid_min = [&](const Eigen::VectorXd& tt, int& arg_i, int& arg_j) {
        Eigen::MatrixXd pad = Eigen::MatrixXd::Zero(grid_resolution, grid_resolution);
        for (int c = 0; c < d; ++c)
            for (const auto& o : classes[c]) {
                int i = o.di % grid_resolution, j = o.dj % grid_resolution;
                if (i < 0) i += grid_resolution;
                if (j < 0) j += grid_resolution;
                pad(i, j) += tt(c);
            }
        Eigen::MatrixXd f = fft::dft2(pad).real();
        double worst = 1.0 - f(0, 0);
        arg_i = 0;
        arg_j = 0;
        for (int i = 0; i < grid_resolution; ++i)
            for (int j = 0; j < grid_resolution; ++j)
                if (1.0 - f(i, j) < worst) {
                    worst = 1.0 - f(i, j);
                    arg_i = i;
                    arg_j = j;
                }
        return worst;
    };

    std::vector<Eigen::RowVectorXd> cut_rows;
    bool constrained = false;
    for (int round = 0; round < 200; ++round) {
        // ||theta||_1 < 1 already certifies a positive spectral density.
        double l1 = 0.0;
        for (int c = 0; c < d; ++c) l1 += std::abs(t(c)) * classes[c].size();
        if (l1 <= 1.0 - 1e-10) break;
        int ai = 0, aj = 0;
        double fmin = grid_min(t, ai, aj);
        if (fmin >= -1e-10) break;
        constrained = true;
        const double w1 = 2.0 * M_PI * ai / grid_resolution;
        const double w2 = 2.0 * M_PI * aj / grid_resolution;
        Eigen::RowVectorXd row(d);
        for (int c = 0; c < d; ++c) {
            double g = 0.0;
            for (const auto& o : classes[c]) g += std::cos(o.di * w1 + o.dj * w2);
            row(c) = g;
        }
        cut_rows.push_back(row);
        Eigen::MatrixXd G(cut_rows.size(), d);
        for (size_t k = 0; k < cut_rows.size(); ++k) G.row(k) = cut_rows[k];
        Eigen::VectorXd h = Eigen::VectorXd::Ones(cut_rows.size());
        Eigen::MatrixXd Areg = A;
        if (rank_deficient)
            Areg += 1e-12 * emax * Eigen::MatrixXd::Identity(d, d); // keep QP definite
        QpResult qp = solve_qp_activeset(2.0 * Areg, -2.0 * b, G, h,
                                         Eigen::VectorXd::Zero(d), 1e-8, 500);
        if (!qp.converged) throw NumericError("fit_plane: active-set QP did not converge");
        t = qp.x;
        out.kkt_residual = qp.kkt_residual;
    }
    out.on_boundary = constrained;

    double crit = c0 - 2.0 * b.dot(t) + t.dot(A * t);
    ThetaField theta(lat, std::max(crit, 1e-300), iso);
    for (int c = 0; c < d; ++c)
        for (const auto& o : classes[c])
            theta.coeffs(lat.wrap_row(o.di), lat.wrap_col(o.dj)) = t(c);
    out.theta = std::move(theta);
    out.criterion = crit;
    return out;
}

} // namespace gmrf
