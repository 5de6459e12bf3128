#include "lipdyn/graph_ops.hpp"

#include <algorithm>
#include <cmath>

namespace lipdyn {

namespace {

Vec sample_in_ball(Rng& rng, int dim, double radius, const NormFn& norm) {
    if (dim == 0) return Vec(0);
    Vec d = rng.direction(dim);
    double nd = norm(d);
    if (nd <= 0.0) return Vec::Zero(dim);
    double u = std::pow(rng.uniform01(), 1.0 / dim);
    return d * (radius * u / nd);
}

}  // namespace

NearIdentityMap measure_near_identity(const MapFn& g, int dim, double radius,
                                      const NormFn& norm, int n_samples, std::uint64_t seed,
                                      double inflation) {
    NearIdentityMap out;
    out.map = g;
    out.dim = dim;
    out.radius = radius;
    Rng rng(seed);
    double sup = 0.0;
    double lip = 0.0;
    Vec px = Vec::Zero(dim);
    Vec pd = g(px) - px;
    sup = norm(pd);
    for (int i = 0; i < n_samples; ++i) {
        Vec x = sample_in_ball(rng, dim, radius, norm);
        Vec dx = g(x) - x;
        if (!all_finite(dx)) fail("NonFiniteValue", "near-identity deviation is not finite");
        sup = std::max(sup, norm(dx));
        double sep = norm(x - px);
        if (sep > 1e-12) lip = std::max(lip, norm(dx - pd) / sep);
        px = x;
        pd = dx;
    }
    out.sup_dev = sup * inflation;
    out.lip_dev = lip * inflation;
    return out;
}

Vec invert_near_identity(const NearIdentityMap& g, const Vec& y, const NormFn& norm,
                         double fp_tol, int max_iter) {
    if (g.lip_dev >= 0.5)
        fail("NotNearIdentity", "deviation Lipschitz constant " + std::to_string(g.lip_dev) +
                                    " is not below 1/2");
    if (norm(y) > g.radius - g.sup_dev + 1e-15)
        fail("TargetOutsideGuaranteedImage",
             "target norm " + std::to_string(norm(y)) + " exceeds r - alpha = " +
                 std::to_string(g.radius - g.sup_dev));
    Vec x = y;
    for (int it = 0; it < max_iter; ++it) {
        Vec next = y + x - g.map(x);
        double step = norm(next - x);
        x = next;
        if (step <= fp_tol) return x;
    }
    fail("InversionFailed", "Picard iteration did not reach tolerance");
}

namespace {

ReparamResult reparametrize_core(const ParamFn& psi, const LipschitzGraph& ref,
                                 const NormFn& dom_norm, const NormFn& cod_norm,
                                 const ReparamParams& params, bool dom_is_first) {
    const int dn = ref.domain_dim();
    const int cn = ref.codomain_dim;
    const double r = ref.grid.radius;
    auto dom_of = [&](const std::pair<Vec, Vec>& p) { return dom_is_first ? p.first : p.second; };
    auto cod_of = [&](const std::pair<Vec, Vec>& p) { return dom_is_first ? p.second : p.first; };

    // Measure eps = max(sup, Lip) of psi - (id + theta) over the reference box.
    Rng rng(params.seed);
    double sup = 0.0, lip = 0.0;
    Vec px = Vec::Zero(dn);
    auto dev_at = [&](const Vec& xi) -> Vec {
        auto im = psi(xi);
        Vec d(dn + cn);
        d.head(dn) = dom_of(im) - xi;
        d.tail(cn) = cod_of(im) - ref.eval(xi);
        return d;
    };
    auto dev_norm = [&](const Vec& d) {
        double a = dn > 0 ? dom_norm(d.head(dn)) : 0.0;
        double b = cn > 0 ? cod_norm(d.tail(cn)) : 0.0;
        return std::max(a, b);
    };
    Vec pdev = dev_at(px);
    sup = dev_norm(pdev);
    for (int i = 0; i < params.n_samples; ++i) {
        Vec xi(dn);
        for (int k = 0; k < dn; ++k) xi[k] = (2.0 * rng.uniform01() - 1.0) * r;
        Vec d = dev_at(xi);
        sup = std::max(sup, dev_norm(d));
        double sep = dom_norm(xi - px);
        if (sep > 1e-12) lip = std::max(lip, dev_norm(d - pdev) / sep);
        px = xi;
        pdev = d;
    }
    double eps = std::max(sup, lip) * 1.1;

    if (eps >= 0.5 || eps >= r)
        fail("EpsilonTooLarge", "deviation " + std::to_string(eps) +
                                    " leaves no reparametrization domain inside radius " +
                                    std::to_string(r));

    // The domain component of psi is a near-identity map of the box; invert it
    // on the shrunk grid and read the codomain component at the preimage.
    NearIdentityMap ni;
    ni.dim = dn;
    ni.radius = r;
    ni.sup_dev = eps;
    ni.lip_dev = eps;
    ni.map = [&](const Vec& x) { return dom_of(psi(x)); };

    GridSpec grid;
    grid.radius = r - eps;
    grid.nodes_per_axis =
        params.nodes_per_axis.empty() ? ref.grid.nodes_per_axis : params.nodes_per_axis;

    LipschitzGraph out;
    out.base_point = ref.base_point;
    out.direction = ref.direction;
    out.rho = ref.rho;
    out.grid = grid;
    out.codomain_dim = cn;
    out.values.assign(static_cast<std::size_t>(grid.node_count()), Vec::Zero(cn));
    for (long idx = 0; idx < grid.node_count(); ++idx) {
        Vec xi = grid.node(idx);
        Vec pre = invert_near_identity(ni, xi, dom_norm, params.fp_tol, params.max_iter);
        out.values[static_cast<std::size_t>(idx)] = cod_of(psi(pre));
    }
    out.lip_cert = measure_edge_lipschitz(out, dom_norm, cod_norm);

    ReparamResult res;
    res.epsilon = eps;
    res.lip_bound = (ref.lip_cert + eps) / (1.0 - eps);
    res.sup_bound = (1.0 + ref.lip_cert) * eps;
    double sup_diff = 0.0;
    for (long idx = 0; idx < grid.node_count(); ++idx) {
        Vec xi = grid.node(idx);
        sup_diff = std::max(
            sup_diff, cod_norm(out.values[static_cast<std::size_t>(idx)] - ref.eval(xi)));
    }
    res.measured_sup_diff = sup_diff;
    res.graph = std::move(out);
    return res;
}

}  // namespace

ReparamResult reparametrize_unstable_graph(const ParamFn& psi, const LipschitzGraph& theta,
                                           const NormFn& dom_norm, const NormFn& cod_norm,
                                           const ReparamParams& params) {
    return reparametrize_core(psi, theta, dom_norm, cod_norm, params, /*dom_is_first=*/true);
}

ReparamResult reparametrize_stable_graph(const ParamFn& psi, const LipschitzGraph& sigma,
                                         const NormFn& dom_norm, const NormFn& cod_norm,
                                         const ReparamParams& params) {
    return reparametrize_core(psi, sigma, dom_norm, cod_norm, params, /*dom_is_first=*/false);
}

CurveFitResult fit_graph_to_curve(const std::vector<std::pair<double, Vec>>& samples,
                                  int nodes, GraphDirection direction, double rho) {
    if (samples.size() < 2) fail("ConfigInvalid", "curve fit needs at least two samples");
    std::vector<std::pair<double, Vec>> pts = samples;
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    bool monotone = true;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].first - pts[i - 1].first <= 0.0) monotone = false;
    if (!monotone) fail("CurveNotGraphical", "curve is not strictly monotone in the base axis");

    const int cn = static_cast<int>(pts.front().second.size());
    double lo = pts.front().first, hi = pts.back().first;
    double center = 0.5 * (lo + hi);
    double radius = 0.5 * (hi - lo);

    auto interp = [&](double t) -> Vec {
        auto it = std::lower_bound(pts.begin(), pts.end(), t,
                                   [](const auto& p, double v) { return p.first < v; });
        if (it == pts.begin()) return pts.front().second;
        if (it == pts.end()) return pts.back().second;
        auto prev = std::prev(it);
        double w = (t - prev->first) / (it->first - prev->first);
        return (1.0 - w) * prev->second + w * it->second;
    };

    CurveFitResult out;
    out.monotone = monotone;
    out.center_dom = Vec::Constant(1, center);
    out.center_cod = interp(center);
    out.graph.direction = direction;
    out.graph.rho = rho;
    out.graph.codomain_dim = cn;
    out.graph.grid.radius = radius;
    out.graph.grid.nodes_per_axis = {nodes};
    out.graph.values.reserve(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        double t = center + out.graph.grid.axis_coord(0, i);
        out.graph.values.push_back(interp(t) - out.center_cod);
    }
    out.graph.lip_cert = measure_edge_lipschitz(out.graph, euclidean_norm, euclidean_norm);
    return out;
}

}  // namespace lipdyn
