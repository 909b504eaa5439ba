#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmrf/params.hpp"
#include "gmrf/simulate.hpp"
#include "gmrf/spectral.hpp"

namespace gmrf {

/// Aggregated periodogram of a dataset: S[i,j] = sum_k |dft2(X_k)[i,j]|^2.
/// Built once per dataset, shared read-only across model fits.
struct PeriodogramCache {
    LatticeSpec lattice;
    int n = 0;
    Eigen::MatrixXd S;

    static PeriodogramCache build(const FieldObservations& obs);
};

/// Conditional least-squares criterion, direct form: mean squared residual of
/// the simultaneous conditional regressions with wrapped indices.
double cls_direct(const Eigen::MatrixXd& coeffs, const FieldObservations& obs);
double cls_direct(const ThetaField& theta, const FieldObservations& obs);

/// Same criterion through the Fourier identity
///   gamma = 1/(n p1^2 p2^2) sum_{i,j} (1 - lambda[i,j](theta))^2 S[i,j];
/// O(p1 p2) per evaluation once the periodogram is cached.
double cls_fft(const Eigen::MatrixXd& coeffs, const PeriodogramCache& cache);
double cls_fft(const Eigen::MatrixXd& coeffs, const FieldObservations& obs);

struct FitResult {
    ThetaField theta;
    double criterion = 0.0;
    NeighborhoodModel model;
    bool on_boundary = false;
    double kkt_residual = 0.0;
    std::optional<Sublattice> sublattice; // plane fits only
    bool non_unique = false;              // plane fits with |Lambda'| < d_m
};

/// Constrained per-model CLS estimation on a torus: normal equations in the
/// symmetry-class coordinates; when the unconstrained optimum leaves the
/// closure of Theta_m^+ (or its rho-capped version), an active-set QP on the
/// eigenvalue half-spaces finds the boundary solution.
FitResult fit_torus(const NeighborhoodModel& m, const FieldObservations& obs, bool iso,
                    const ConstraintSpec& constraint = {});
FitResult fit_torus(const NeighborhoodModel& m, const PeriodogramCache& cache, bool iso,
                    const ConstraintSpec& constraint = {});

/// Edge-corrected criterion on a non-toroidal window: residuals only over the
/// sublattice nodes, neighbors never wrap.
double cls_sublattice(const ThetaField& theta, const FieldObservations& obs,
                      const NeighborhoodModel& m, const Sublattice& sub);

/// Per-model CLS estimation on a plane window over the closure of the
/// spectral-density-positive parameter set, enforced on a frequency grid.
FitResult fit_plane(const NeighborhoodModel& m, const FieldObservations& obs,
                    const Sublattice& sub, bool iso, int grid_resolution = 512);

} // namespace gmrf
