#pragma once

// Gridded Lipschitz graphs over a box in subspace coordinates, with multilinear
// interpolation and certified per-axis difference quotients.

#include <string>
#include <vector>

#include "lipdyn/common.hpp"

namespace lipdyn {

// Regular grid on [-radius, radius]^dim. Node counts must be odd (or 1) so the
// origin is always a node; axes with a single node are pinned to 0, which lets
// constant graphs live over high-dimensional domains without blowing up.
struct GridSpec {
    double radius = 1.0;
    std::vector<int> nodes_per_axis;

    int dim() const { return static_cast<int>(nodes_per_axis.size()); }
    long long node_count() const {
        long long n = 1;
        for (int c : nodes_per_axis) n *= c;
        return n;
    }
    int gridded_axes() const {
        int g = 0;
        for (int c : nodes_per_axis) g += (c > 1);
        return g;
    }
    double axis_coord(int axis, int index) const {
        int n = nodes_per_axis[axis];
        if (n == 1) return 0.0;
        return -radius + 2.0 * radius * index / (n - 1);
    }
    double spacing(int axis) const {
        int n = nodes_per_axis[axis];
        return n > 1 ? 2.0 * radius / (n - 1) : 0.0;
    }
    void validate() const;

    Vec node(long long flat) const;               // flat row-major index -> coordinates
    std::vector<int> unflatten(long long flat) const;
    long long flatten(const std::vector<int>& idx) const;
};

enum class GraphDirection { Unstable, Stable };

std::string to_string(GraphDirection d);
GraphDirection direction_from_string(const std::string& s);

struct LipschitzGraph {
    Vec base_point;          // full-space anchor (graphs live in shifted coordinates)
    GraphDirection direction = GraphDirection::Unstable;
    double rho = 1.0;
    GridSpec grid;
    int codomain_dim = 0;
    std::vector<Vec> values;  // one codomain vector per grid node, row-major
    double lip_cert = 0.0;    // max adapted-norm difference quotient over grid edges

    int domain_dim() const { return grid.dim(); }

    // Multilinear interpolation; queries outside the box are clamped onto it,
    // which preserves Lipschitz bounds.
    Vec eval(const Vec& xi) const;

    Vec zero_value() const { return Vec::Zero(codomain_dim); }
    void validate() const;
};

// Constant-zero graph over the given grid (also covers 0-dim domains/codomains).
LipschitzGraph make_zero_graph(const Vec& base_point, GraphDirection direction, double rho,
                               const GridSpec& grid, int codomain_dim);

// Max difference quotient over adjacent node pairs along each axis, measured
// with the supplied norms (domain norm applied to the single-axis step).
double measure_edge_lipschitz(const LipschitzGraph& g, const NormFn& dom_norm,
                              const NormFn& cod_norm);

// Max quotient over random interpolated pairs; a sampling check that the
// interpolant respects the Lipschitz bound away from the nodes.
double measure_pair_lipschitz(const LipschitzGraph& g, const NormFn& dom_norm,
                              const NormFn& cod_norm, int n_pairs, Rng& rng);

// Sup over nodes of cod_norm(g - h); the grids must agree.
double sup_node_distance(const LipschitzGraph& g, const LipschitzGraph& h,
                         const NormFn& cod_norm);

// Graph-space metric sup ||g(xi)-h(xi)|| / ||xi|| over nonzero nodes.
double relative_node_distance(const LipschitzGraph& g, const LipschitzGraph& h,
                              const NormFn& dom_norm, const NormFn& cod_norm);

}  // namespace lipdyn
