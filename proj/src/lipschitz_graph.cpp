#include "lipdyn/lipschitz_graph.hpp"

#include <algorithm>
#include <cmath>

namespace lipdyn {

void GridSpec::validate() const {
    if (!(radius > 0)) fail("ConfigInvalid", "grid radius must be positive");
    for (int c : nodes_per_axis) {
        if (c < 1) fail("ConfigInvalid", "grid axis needs at least one node");
        if (c > 1 && c % 2 == 0)
            fail("ConfigInvalid", "grid node counts must be odd so the origin is a node");
    }
    if (gridded_axes() > 3)
        fail("ConfigInvalid", "at most 3 gridded axes are supported");
}

Vec GridSpec::node(long long flat) const {
    std::vector<int> idx = unflatten(flat);
    Vec x(dim());
    for (int ax = 0; ax < dim(); ++ax) x[ax] = axis_coord(ax, idx[ax]);
    return x;
}

std::vector<int> GridSpec::unflatten(long long flat) const {
    std::vector<int> idx(dim());
    for (int ax = dim() - 1; ax >= 0; --ax) {
        idx[ax] = static_cast<int>(flat % nodes_per_axis[ax]);
        flat /= nodes_per_axis[ax];
    }
    return idx;
}

long long GridSpec::flatten(const std::vector<int>& idx) const {
    long long flat = 0;
    for (int ax = 0; ax < dim(); ++ax) flat = flat * nodes_per_axis[ax] + idx[ax];
    return flat;
}

std::string to_string(GraphDirection d) {
    return d == GraphDirection::Unstable ? "unstable" : "stable";
}

GraphDirection direction_from_string(const std::string& s) {
    if (s == "unstable") return GraphDirection::Unstable;
    if (s == "stable") return GraphDirection::Stable;
    fail("ConfigInvalid", "unknown graph direction '" + s + "'");
}

void LipschitzGraph::validate() const {
    grid.validate();
    if (static_cast<long long>(values.size()) != grid.node_count())
        fail("ConfigInvalid", "graph value count does not match grid");
    for (const Vec& v : values)
        if (v.size() != codomain_dim || !all_finite(v))
            fail("ConfigInvalid", "graph values must be finite with the declared codomain dim");
}

Vec LipschitzGraph::eval(const Vec& xi) const {
    const int d = grid.dim();
    if (xi.size() != d) fail("ConfigInvalid", "graph query has wrong dimension");
    if (codomain_dim == 0) return Vec(0);

    // Per-axis cell index and interpolation weight, with clamping to the box.
    std::vector<int> lo(d);
    std::vector<double> w(d);
    int active = 0;
    std::vector<int> active_axes;
    for (int ax = 0; ax < d; ++ax) {
        int n = grid.nodes_per_axis[ax];
        if (n == 1) {
            lo[ax] = 0;
            w[ax] = 0.0;
            continue;
        }
        double t = (std::clamp(xi[ax], -grid.radius, grid.radius) + grid.radius) /
                   (2.0 * grid.radius) * (n - 1);
        int i = std::min(static_cast<int>(std::floor(t)), n - 2);
        lo[ax] = i;
        w[ax] = t - i;
        active_axes.push_back(ax);
        ++active;
    }

    Vec out = Vec::Zero(codomain_dim);
    std::vector<int> idx(lo);
    for (int corner = 0; corner < (1 << active); ++corner) {
        double weight = 1.0;
        for (int j = 0; j < active; ++j) {
            int ax = active_axes[j];
            bool hi = (corner >> j) & 1;
            idx[ax] = lo[ax] + (hi ? 1 : 0);
            weight *= hi ? w[ax] : 1.0 - w[ax];
        }
        if (weight != 0.0) out += weight * values[grid.flatten(idx)];
    }
    return out;
}

LipschitzGraph make_zero_graph(const Vec& base_point, GraphDirection direction, double rho,
                               const GridSpec& grid, int codomain_dim) {
    grid.validate();
    LipschitzGraph g;
    g.base_point = base_point;
    g.direction = direction;
    g.rho = rho;
    g.grid = grid;
    g.codomain_dim = codomain_dim;
    g.values.assign(static_cast<size_t>(grid.node_count()), Vec::Zero(codomain_dim));
    g.lip_cert = 0.0;
    return g;
}

double measure_edge_lipschitz(const LipschitzGraph& g, const NormFn& dom_norm,
                              const NormFn& cod_norm) {
    const int d = g.grid.dim();
    if (g.codomain_dim == 0) return 0.0;
    double lip = 0.0;
    const long long total = g.grid.node_count();
    for (long long flat = 0; flat < total; ++flat) {
        std::vector<int> idx = g.grid.unflatten(flat);
        for (int ax = 0; ax < d; ++ax) {
            if (idx[ax] + 1 >= g.grid.nodes_per_axis[ax]) continue;
            std::vector<int> nxt(idx);
            ++nxt[ax];
            Vec step = Vec::Zero(d);
            step[ax] = g.grid.spacing(ax);
            double denom = dom_norm(step);
            if (denom <= 0) continue;
            double num = cod_norm(g.values[g.grid.flatten(nxt)] - g.values[flat]);
            lip = std::max(lip, num / denom);
        }
    }
    return lip;
}

double measure_pair_lipschitz(const LipschitzGraph& g, const NormFn& dom_norm,
                              const NormFn& cod_norm, int n_pairs, Rng& rng) {
    const int d = g.grid.dim();
    if (g.codomain_dim == 0 || d == 0) return 0.0;
    double lip = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
        Vec x = rng.uniform_vec(d, -g.grid.radius, g.grid.radius);
        Vec y = rng.uniform_vec(d, -g.grid.radius, g.grid.radius);
        double denom = dom_norm(x - y);
        if (denom < 1e-12) continue;
        lip = std::max(lip, cod_norm(g.eval(x) - g.eval(y)) / denom);
    }
    return lip;
}

double sup_node_distance(const LipschitzGraph& g, const LipschitzGraph& h,
                         const NormFn& cod_norm) {
    if (g.values.size() != h.values.size())
        fail("ConfigInvalid", "sup_node_distance: grids disagree");
    double m = 0.0;
    for (size_t i = 0; i < g.values.size(); ++i)
        m = std::max(m, cod_norm(g.values[i] - h.values[i]));
    return m;
}

double relative_node_distance(const LipschitzGraph& g, const LipschitzGraph& h,
                              const NormFn& dom_norm, const NormFn& cod_norm) {
    if (g.values.size() != h.values.size())
        fail("ConfigInvalid", "relative_node_distance: grids disagree");
    double m = 0.0;
    const long long total = g.grid.node_count();
    for (long long flat = 0; flat < total; ++flat) {
        Vec xi = g.grid.node(flat);
        double nx = dom_norm(xi);
        if (nx <= 0) continue;
        m = std::max(m, cod_norm(g.values[flat] - h.values[flat]) / nx);
    }
    return m;
}

}  // namespace lipdyn
