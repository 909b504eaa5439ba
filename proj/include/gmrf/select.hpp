#pragma once

#include <span>
#include <string>
#include <vector>

#include "gmrf/cls.hpp"

namespace gmrf {

/// The piecewise-constant map N -> selected model under pen(m) = N * d_m/norm,
/// right-continuous, with model dimension nonincreasing in N. breakpoints[0]
/// is always {0, model for N just above 0}.
struct SelectionPath {
    struct Breakpoint {
        double N = 0.0;
        int model_index = -1; // model chosen for N just above this breakpoint
    };
    std::vector<Breakpoint> breakpoints;
    double normalization = 1.0;
    std::vector<int> dims; // dimension of every candidate model (selection coordinates)

    /// Selected model index at penalty multiplier N > 0.
    int eval(double N) const;
    bool constant() const { return breakpoints.size() <= 1; }
};

/// argmin of criterion + pen over the fitted models; ties toward smaller dim.
int penalized_select(std::span<const FitResult> fits, std::span<const double> pen, bool iso);

/// Exact selection path via the lower convex hull of (d_m/normalization,
/// criterion) in O(M log M).
SelectionPath selection_path(std::span<const FitResult> fits, bool iso, double normalization);

struct JumpInfo {
    double N_min = 0.0;
    int jump = 0; // dimension drop at N_min
};

/// Breakpoint with the maximal dimension jump; ties toward the largest N.
/// Errors on a constant path.
JumpInfo find_N_min(const SelectionPath& path);

struct ModelFitSummary {
    int index = 0;
    int dim = 0;
    double criterion = 0.0;
};

struct SelectionReport {
    SelectionPath path;
    double N_min_hat = 0.0;
    int jump_size = 0;
    int selected_index = 0;
    FitResult final_fit;
    std::vector<FitResult> all_fits; // step-1 fits, aligned with the collection
    std::vector<ModelFitSummary> table;
    std::vector<std::string> warnings;
};

/// Slope-heuristic selection on a torus: fit every model, locate the maximal
/// dimension jump of the path, select at twice the minimal penalty.
SelectionReport slope_select_torus(const FieldObservations& obs,
                                   std::span<const NeighborhoodModel> collection, bool iso,
                                   const ConstraintSpec& constraint = {});

/// Slope-heuristic selection on a plane window: step-1 fits share the common
/// sublattice Lambda_M, the selected model is refit on its own Lambda_m.
SelectionReport slope_select_plane(const FieldObservations& obs,
                                   std::span<const NeighborhoodModel> collection, bool iso,
                                   int grid_resolution = 512);

} // namespace gmrf
