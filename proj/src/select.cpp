#include "gmrf/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace gmrf {

int SelectionPath::eval(double N) const {
    if (breakpoints.empty()) throw ConfigError("SelectionPath: empty path");
    // Right-continuous: the segment starting at the largest breakpoint <= N.
    int idx = breakpoints.front().model_index;
    for (const auto& bp : breakpoints) {
        if (bp.N <= N) idx = bp.model_index;
        else break;
    }
    return idx;
}

int penalized_select(std::span<const FitResult> fits, std::span<const double> pen, bool iso) {
    if (fits.empty()) throw ConfigError("penalized_select: empty fit list");
    if (pen.size() != fits.size()) throw ConfigError("penalized_select: pen size mismatch");
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    int best_dim = std::numeric_limits<int>::max();
    for (size_t k = 0; k < fits.size(); ++k) {
        if (pen[k] < 0) throw ConfigError("penalized_select: negative penalty");
        double v = fits[k].criterion + pen[k];
        int d = fits[k].model.dim(iso);
        if (v < best_val || (v == best_val && d < best_dim)) {
            best_val = v;
            best = static_cast<int>(k);
            best_dim = d;
        }
    }
    return best;
}

SelectionPath selection_path(std::span<const FitResult> fits, bool iso, double normalization) {
    if (fits.empty()) throw ConfigError("selection_path: empty fit list");
    if (normalization <= 0) throw ConfigError("selection_path: normalization must be positive");

    SelectionPath path;
    path.normalization = normalization;
    path.dims.reserve(fits.size());
    for (const auto& f : fits) {
        if (!std::isfinite(f.criterion))
            throw NumericError("selection_path: non-finite criterion");
        path.dims.push_back(f.model.dim(iso));
    }

    // One point per distinct x = d/normalization; exact duplicates collapse,
    // duplicate dimensions keep the best criterion (then the smaller index).
    struct Pt {
        double x, y;
        int idx;
    };
    std::map<int, Pt> best_at_dim;
    for (size_t k = 0; k < fits.size(); ++k) {
        Pt p{path.dims[k] / normalization, fits[k].criterion, static_cast<int>(k)};
        auto it = best_at_dim.find(path.dims[k]);
        if (it == best_at_dim.end() || p.y < it->second.y) best_at_dim[path.dims[k]] = p;
    }
    std::vector<Pt> pts;
    pts.reserve(best_at_dim.size());
    for (auto& [d, p] : best_at_dim) pts.push_back(p); // ascending in x

    // Lower convex hull, x ascending (monotone chain).
    std::vector<Pt> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2) {
            const Pt& a = hull[hull.size() - 2];
            const Pt& b = hull[hull.size() - 1];
            if ((b.y - a.y) * (p.x - a.x) >= (p.y - a.y) * (b.x - a.x)) hull.pop_back();
            else break;
        }
        hull.push_back(p);
    }
    // Only strictly criterion-decreasing vertices can win for some N > 0.
    std::vector<Pt> frontier;
    for (auto it = hull.rbegin(); it != hull.rend(); ++it)
        if (frontier.empty() || it->y < frontier.back().y) frontier.push_back(*it);
    // frontier: x descending, y ascending — largest model first.

    path.breakpoints.push_back({0.0, frontier.front().idx});
    for (size_t k = 0; k + 1 < frontier.size(); ++k) {
        const Pt& big = frontier[k];
        const Pt& small = frontier[k + 1];
        double N = (small.y - big.y) / (big.x - small.x);
        path.breakpoints.push_back({N, small.idx});
    }
    return path;
}

JumpInfo find_N_min(const SelectionPath& path) {
    if (path.constant())
        throw NumericError("find_N_min: no dimension jump detected (constant path)");
    JumpInfo best;
    for (size_t k = 1; k < path.breakpoints.size(); ++k) {
        int before = path.dims[path.breakpoints[k - 1].model_index];
        int after = path.dims[path.breakpoints[k].model_index];
        int jump = before - after;
        if (jump >= best.jump) { // ties resolved toward the largest N
            best.jump = jump;
            best.N_min = path.breakpoints[k].N;
        }
    }
    return best;
}

namespace {

SelectionReport assemble_report(std::vector<FitResult> fits, bool iso, double normalization) {
    SelectionReport rep;
    rep.path = selection_path(fits, iso, normalization);
    for (size_t k = 0; k < fits.size(); ++k)
        rep.table.push_back({static_cast<int>(k), fits[k].model.dim(iso), fits[k].criterion});
    if (rep.path.constant()) {
        // All-flat path: fall back to the constant segment (m0 whenever the
        // collection contains it).
        rep.N_min_hat = 0.0;
        rep.jump_size = 0;
        rep.selected_index = rep.path.breakpoints.front().model_index;
        rep.warnings.push_back("selection path is constant; no dimension jump detected");
    } else {
        JumpInfo j = find_N_min(rep.path);
        rep.N_min_hat = j.N_min;
        rep.jump_size = j.jump;
        rep.selected_index = rep.path.eval(2.0 * j.N_min);
    }
    rep.all_fits = std::move(fits);
    return rep;
}

} // namespace

SelectionReport slope_select_torus(const FieldObservations& obs,
                                   std::span<const NeighborhoodModel> collection, bool iso,
                                   const ConstraintSpec& constraint) {
    if (collection.empty()) throw ConfigError("slope_select_torus: empty collection");
    PeriodogramCache cache = PeriodogramCache::build(obs);
    std::vector<FitResult> fits;
    fits.reserve(collection.size());
    for (const auto& m : collection) fits.push_back(fit_torus(m, cache, iso, constraint));
    SelectionReport rep =
        assemble_report(std::move(fits), iso, static_cast<double>(obs.n()) * obs.lattice.size());
    rep.final_fit = rep.all_fits[rep.selected_index];
    return rep;
}

SelectionReport slope_select_plane(const FieldObservations& obs,
                                   std::span<const NeighborhoodModel> collection, bool iso,
                                   int grid_resolution) {
    if (collection.empty()) throw ConfigError("slope_select_plane: empty collection");
    std::vector<NeighborhoodModel> coll(collection.begin(), collection.end());
    Sublattice common = common_sublattice(coll, obs.lattice);
    std::vector<FitResult> fits;
    fits.reserve(collection.size());
    for (const auto& m : collection)
        fits.push_back(fit_plane(m, obs, common, iso, grid_resolution));
    SelectionReport rep = assemble_report(
        std::move(fits), iso, static_cast<double>(obs.n()) * common.count());
    if (common.count() < 100)
        rep.warnings.push_back("common sublattice has fewer than 100 nodes (" +
                               std::to_string(common.count()) + "); fits may be unreliable");
    // Step 4: refit the selected model on its own (larger) sublattice.
    const auto& chosen = collection[rep.selected_index];
    Sublattice own = sublattice_for_model(chosen, obs.lattice);
    rep.final_fit = fit_plane(chosen, obs, own, iso, grid_resolution);
    return rep;
}

} // namespace gmrf
