#include "gmrf/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gmrf {

namespace {

long norm2_toroidal(const Offset& o, const LatticeSpec& lat) {
    int i = lat.wrap_row(o.di), j = lat.wrap_col(o.dj);
    long a = std::min(i, lat.p1 - i), b = std::min(j, lat.p2 - j);
    return a * a + b * b;
}

long norm2_plane(const Offset& o) {
    return static_cast<long>(o.di) * o.di + static_cast<long>(o.dj) * o.dj;
}

Offset canon(const Offset& o, const LatticeSpec& lat, bool torus) {
    if (!torus) return o;
    return {lat.rep_row(o.di), lat.rep_col(o.dj)};
}

// Orbit of an offset under the symmetry group. Negation always; for iso also
// axis reflections and, when the geometry is square (or plane), transposition.
std::vector<Offset> orbit(const Offset& o, const LatticeSpec& lat, bool torus, bool iso) {
    std::set<Offset> orb;
    const bool transpose_ok = !torus || (lat.p1 == lat.p2);
    auto add = [&](int a, int b) { orb.insert(canon({a, b}, lat, torus)); };
    add(o.di, o.dj);
    add(-o.di, -o.dj);
    if (iso) {
        add(-o.di, o.dj);
        add(o.di, -o.dj);
        if (transpose_ok) {
            add(o.dj, o.di);
            add(-o.dj, o.di);
            add(o.dj, -o.di);
            add(-o.dj, -o.di);
        }
    }
    return {orb.begin(), orb.end()};
}

std::vector<std::vector<Offset>> partition_classes(const std::vector<Offset>& offsets,
                                                   const LatticeSpec& lat, bool torus,
                                                   bool iso) {
    std::map<Offset, std::vector<Offset>> by_rep;
    for (const auto& o : offsets) {
        auto orb = orbit(o, lat, torus, iso);
        by_rep[orb.front()] = {}; // key = min element (set iteration is ordered)
    }
    for (const auto& o : offsets) {
        auto orb = orbit(o, lat, torus, iso);
        by_rep[orb.front()].push_back(o);
    }
    std::vector<std::vector<Offset>> out;
    out.reserve(by_rep.size());
    for (auto& [rep, members] : by_rep) {
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    return out;
}

NeighborhoodModel make_model(std::vector<Offset> offsets, double radius,
                             const LatticeSpec& lat, bool torus) {
    NeighborhoodModel m;
    m.radius = radius;
    std::sort(offsets.begin(), offsets.end());
    m.offsets = std::move(offsets);
    m.aniso_classes = partition_classes(m.offsets, lat, torus, false);
    m.iso_classes = partition_classes(m.offsets, lat, torus, true);
    m.d_m = static_cast<int>(m.aniso_classes.size());
    m.d_m_iso = static_cast<int>(m.iso_classes.size());
    int reach = 0;
    for (const auto& o : m.offsets)
        reach = std::max({reach, std::abs(o.di), std::abs(o.dj)});
    m.edge_extent = reach;
    return m;
}

} // namespace

bool NeighborhoodModel::contains(const Offset& o) const {
    return std::binary_search(offsets.begin(), offsets.end(), o);
}

double toroidal_norm(const Offset& o, const LatticeSpec& lattice) {
    if (!lattice.toroidal) throw ConfigError("toroidal_norm: lattice is not toroidal");
    return std::sqrt(static_cast<double>(norm2_toroidal(o, lattice)));
}

double plane_norm(const Offset& o) {
    return std::sqrt(static_cast<double>(norm2_plane(o)));
}

std::vector<NeighborhoodModel> build_model_collection(const LatticeSpec& lattice,
                                                      int max_dim, bool iso) {
    if (max_dim < 0) throw ConfigError("build_model_collection: max_dim must be >= 0");

    // Candidate offsets grouped by squared norm, in canonical coordinates.
    std::map<long, std::vector<Offset>> by_r2;
    int full_dim = 0;
    if (lattice.toroidal) {
        std::set<Offset> seen;
        for (int i = 0; i < lattice.p1; ++i)
            for (int j = 0; j < lattice.p2; ++j) {
                if (i == 0 && j == 0) continue;
                Offset o = canon({i, j}, lattice, true);
                if (!seen.insert(o).second) continue;
                by_r2[norm2_toroidal(o, lattice)].push_back(o);
            }
        std::vector<Offset> all;
        for (auto& [r2, v] : by_r2) all.insert(all.end(), v.begin(), v.end());
        full_dim = static_cast<int>(partition_classes(all, lattice, true, iso).size());
        if (max_dim > full_dim)
            throw ConfigError("build_model_collection: max_dim " + std::to_string(max_dim) +
                              " exceeds the full lattice model dimension " +
                              std::to_string(full_dim));
    } else {
        // Plane window: discs on Z^2, but a model must leave a nonempty Lambda_m,
        // i.e. per-direction reach < ceil(p/2).
        const int reach_i = (lattice.p1 - 1) / 2, reach_j = (lattice.p2 - 1) / 2;
        for (int i = -reach_i; i <= reach_i; ++i)
            for (int j = -reach_j; j <= reach_j; ++j) {
                if (i == 0 && j == 0) continue;
                by_r2[norm2_plane({i, j})].push_back({i, j});
            }
        std::vector<Offset> all;
        for (auto& [r2, v] : by_r2) all.insert(all.end(), v.begin(), v.end());
        full_dim = static_cast<int>(partition_classes(all, lattice, false, iso).size());
        if (max_dim > full_dim)
            throw ConfigError("build_model_collection: max_dim " + std::to_string(max_dim) +
                              " exceeds the largest disc model fitting the window (dim " +
                              std::to_string(full_dim) + ")");
    }

    std::vector<NeighborhoodModel> out;
    out.push_back(make_model({}, 0.0, lattice, lattice.toroidal));

    std::vector<Offset> acc;
    for (const auto& [r2, group] : by_r2) {
        acc.insert(acc.end(), group.begin(), group.end());
        // In plane mode a disc radius may exceed the per-axis enumeration box;
        // only radii fully realized inside the box generate valid discs.
        if (!lattice.toroidal) {
            double r = std::sqrt(static_cast<double>(r2));
            if (r > (lattice.p1 - 1) / 2 || r > (lattice.p2 - 1) / 2) break;
        }
        NeighborhoodModel m =
            make_model(acc, std::sqrt(static_cast<double>(r2)), lattice, lattice.toroidal);
        if (m.dim(iso) > max_dim) break;
        out.push_back(std::move(m));
    }
    return out;
}

Sublattice sublattice_for_model(const NeighborhoodModel& m, const LatticeSpec& lattice) {
    if (lattice.toroidal)
        throw ConfigError("sublattice_for_model: defined for non-toroidal windows only");
    int lo_i = 0, hi_i = lattice.p1 - 1, lo_j = 0, hi_j = lattice.p2 - 1;
    for (const auto& o : m.offsets) {
        lo_i = std::max(lo_i, -o.di);
        hi_i = std::min(hi_i, lattice.p1 - 1 - o.di);
        lo_j = std::max(lo_j, -o.dj);
        hi_j = std::min(hi_j, lattice.p2 - 1 - o.dj);
    }
    if (lo_i > hi_i || lo_j > hi_j)
        throw NumericError("sublattice_for_model: Lambda_m is empty (model too large for window)");
    Sublattice s;
    s.nodes.reserve(static_cast<size_t>(hi_i - lo_i + 1) * (hi_j - lo_j + 1));
    for (int i = lo_i; i <= hi_i; ++i)
        for (int j = lo_j; j <= hi_j; ++j) s.nodes.emplace_back(i, j);
    return s;
}

Sublattice common_sublattice(const std::vector<NeighborhoodModel>& collection,
                             const LatticeSpec& lattice) {
    if (collection.empty()) throw ConfigError("common_sublattice: empty collection");
    size_t largest = 0;
    for (size_t k = 1; k < collection.size(); ++k)
        if (collection[k].offsets.size() > collection[largest].offsets.size()) largest = k;
    return sublattice_for_model(collection[largest], lattice);
}

} // namespace gmrf
