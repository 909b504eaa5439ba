#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "gmrf/errors.hpp"

namespace gmrf {

/// Rectangular lattice window, optionally with periodic (toroidal) topology.
/// All coordinate arithmetic on a torus is modulo (p1, p2).
struct LatticeSpec {
    int p1 = 0;          // rows
    int p2 = 0;          // columns
    bool toroidal = true;

    LatticeSpec() = default;
    LatticeSpec(int rows, int cols, bool torus) : p1(rows), p2(cols), toroidal(torus) {
        if (p1 < 2 || p2 < 2) throw ConfigError("LatticeSpec: p1 and p2 must be >= 2");
    }

    int size() const { return p1 * p2; }

    int wrap_row(int i) const { int r = i % p1; return r < 0 ? r + p1 : r; }
    int wrap_col(int j) const { int r = j % p2; return r < 0 ? r + p2 : r; }

    // Representative coordinate in (-p/2, p/2]. For even p the two halves of a
    // wrapped pair meet at exactly p/2 and collapse onto one representative.
    int rep_row(int i) const { int r = wrap_row(i); return r > p1 / 2 ? r - p1 : r; }
    int rep_col(int j) const { int r = wrap_col(j); return r > p2 / 2 ? r - p2 : r; }

    bool operator==(const LatticeSpec&) const = default;
};

/// An integer lattice offset. For toroidal lattices offsets are stored in
/// representative coordinates (see LatticeSpec::rep_row).
struct Offset {
    int di = 0;
    int dj = 0;
    auto operator<=>(const Offset&) const = default;
};

/// Disc-shaped neighborhood: every offset with norm <= radius, and its
/// symmetry classes. aniso_classes pair each offset with its negation (the
/// free parameters of a centrally symmetric coefficient matrix); iso_classes
/// are orbits under axis reflections and, on square geometries, transposition.
struct NeighborhoodModel {
    double radius = 0.0;
    std::vector<Offset> offsets;
    std::vector<std::vector<Offset>> aniso_classes;
    std::vector<std::vector<Offset>> iso_classes;
    int d_m = 0;
    int d_m_iso = 0;
    int edge_extent = 0; // max per-direction reach, used for edge-effect sublattices

    bool empty() const { return offsets.empty(); }
    int dim(bool iso) const { return iso ? d_m_iso : d_m; }
    const std::vector<std::vector<Offset>>& classes(bool iso) const {
        return iso ? iso_classes : aniso_classes;
    }
    bool contains(const Offset& o) const;
};

/// A subset of window nodes (row, col), 0-based.
struct Sublattice {
    std::vector<std::pair<int, int>> nodes;
    int count() const { return static_cast<int>(nodes.size()); }
};

/// Toroidal norm |(i,j)|_t = sqrt(min(i,p1-i)^2 + min(j,p2-j)^2) with the
/// coordinates first reduced modulo (p1, p2).
double toroidal_norm(const Offset& o, const LatticeSpec& lattice);

/// Euclidean norm of an offset (plane geometry).
double plane_norm(const Offset& o);

/// The ordered collection of disc models m0 c m1 c ... with
/// dim <= max_dim (iso selects which dimension is capped). Radii are the
/// realized offset norms, so consecutive models differ. For toroidal lattices
/// distances use the toroidal norm; for plane windows the euclidean norm on
/// Z^2 offsets, capped so every model keeps a nonempty edge-corrected
/// sublattice.
std::vector<NeighborhoodModel> build_model_collection(const LatticeSpec& lattice,
                                                      int max_dim, bool iso);

/// Lambda_m: nodes whose whole m-neighborhood lies inside the window.
/// Errors when the model is too large for the window.
Sublattice sublattice_for_model(const NeighborhoodModel& m, const LatticeSpec& lattice);

/// Smallest sublattice among Lambda_m over a collection (the one of the
/// largest model, since models are nested).
Sublattice common_sublattice(const std::vector<NeighborhoodModel>& collection,
                             const LatticeSpec& lattice);

} // namespace gmrf
