#include "lipdyn/graph_transform.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

namespace lipdyn {

MapFn extend_lipschitz(const MapFn& n, double r, const NormFn& norm) {
    if (!(r > 0)) fail("ConfigInvalid", "extend_lipschitz: radius must be positive");
    return [n, r, norm](const Vec& x) -> Vec {
        double nx = norm(x);
        if (nx <= r) return n(x);
        return n((r / nx) * x);
    };
}

namespace {

struct Workspace {
    Mat Mu, Ms;
    Eigen::PartialPivLU<Mat> Mu_lu;
    bool has_u = false, has_s = false;

    explicit Workspace(const SplitSystem& sys) {
        has_u = sys.dim_u() > 0;
        has_s = sys.dim_s() > 0;
        if (has_u) {
            Mu = sys.block_u();
            Mu_lu.compute(Mu);
        }
        if (has_s) Ms = sys.block_s();
    }
};

// Lift graph coordinates to a full-space point.
Vec lift(const SplitSystem& sys, const LipschitzGraph& g, const Vec& dom, const Vec& cod) {
    if (g.direction == GraphDirection::Unstable) return sys.norm.from_coords(dom, cod);
    return sys.norm.from_coords(cod, dom);
}

double smallness_margin(const SplitSystem& sys) {
    double g = sys.gamma;
    const auto& sp = sys.split;
    return std::min(sp.rho - (sp.b + 2.0 * g), (sp.a - 2.0 * g) - sp.rho);
}

PreimageResult solve_preimage_ws(const SplitSystem& sys, const LipschitzGraph& graph,
                                 const Vec& target, const Workspace& ws, double fp_tol,
                                 int max_iter) {
    if (graph.direction != GraphDirection::Unstable)
        fail("ConfigInvalid", "solve_preimage expects an unstable-direction graph");
    if (!ws.has_u) return PreimageResult{Vec(0), 0, 0.0};

    auto step = [&](const Vec& xi) -> Vec {
        Vec x = lift(sys, graph, xi, graph.eval(xi));
        return ws.Mu_lu.solve(target - sys.n_u(x));
    };

    Vec xi = ws.Mu_lu.solve(target);
    double prev_res = std::numeric_limits<double>::infinity();
    int grew = 0;
    for (int k = 1; k <= max_iter; ++k) {
        Vec next = step(xi);
        double res = sys.norm.norm_u(next - xi);
        xi = next;
        if (res <= fp_tol) return PreimageResult{xi, k, res};
        if (res > prev_res * 1.5 && res > 10.0 * fp_tol) {
            if (++grew >= 3)
                fail("ContractionFailed",
                     "preimage residual growing after " + std::to_string(k) + " iterations");
        } else {
            grew = 0;
        }
        prev_res = res;
    }
    fail("ContractionFailed", "preimage iteration did not reach fp_tol in " +
                                  std::to_string(max_iter) + " iterations");
}

}  // namespace

PreimageResult solve_preimage(const SplitSystem& sys, const LipschitzGraph& graph,
                              const Vec& target, double fp_tol, int max_iter) {
    Workspace ws(sys);
    return solve_preimage_ws(sys, graph, target, ws, fp_tol, max_iter);
}

namespace {

LipschitzGraph transform_once(const SplitSystem& sys, const LipschitzGraph& graph,
                              const Workspace& ws, double fp_tol, int max_iter) {
    LipschitzGraph out = graph;
    const long long total = graph.grid.node_count();

    if (graph.direction == GraphDirection::Unstable) {
        for (long long flat = 0; flat < total; ++flat) {
            Vec target = graph.grid.node(flat);
            Vec xi =
                ws.has_u ? solve_preimage_ws(sys, graph, target, ws, fp_tol, max_iter).xi : Vec(0);
            Vec x = lift(sys, graph, xi, graph.eval(xi));
            Vec value = Vec::Zero(graph.codomain_dim);
            if (ws.has_s) value = ws.Ms * graph.eval(xi) + sys.n_s(x);
            out.values[flat] = value;
        }
    } else {
        for (long long flat = 0; flat < total; ++flat) {
            Vec eta = graph.grid.node(flat);
            Vec x = lift(sys, graph, eta, graph.eval(eta));
            Vec value = Vec::Zero(graph.codomain_dim);
            if (ws.has_u) {
                Vec eta_img = ws.has_s ? Vec(ws.Ms * eta + sys.n_s(x)) : Vec(0);
                value = ws.Mu_lu.solve(graph.eval(eta_img) - sys.n_u(x));
            }
            out.values[flat] = value;
        }
    }
    return out;
}

void remeasure_and_assert_lip(const SplitSystem& sys, const LipschitzGraph& before,
                              LipschitzGraph& after) {
    NormFn dom = before.direction == GraphDirection::Unstable ? sys.norm.norm_u_fn()
                                                              : sys.norm.norm_s_fn();
    NormFn cod = before.direction == GraphDirection::Unstable ? sys.norm.norm_s_fn()
                                                              : sys.norm.norm_u_fn();
    after.lip_cert = measure_edge_lipschitz(after, dom, cod);
    if (before.lip_cert <= 1.0) {
        const auto& sp = sys.split;
        double g = sys.gamma;
        double bound = before.direction == GraphDirection::Unstable
                           ? (sp.b + 2.0 * g) / (sp.a - 2.0 * g)
                           : (sp.b + 3.0 * g) / sp.a;
        double slack = 1e-9 + (after.grid.gridded_axes() >= 2 ? 0.02 * bound : 0.0);
        if (after.lip_cert > bound + slack)
            fail("ContractionFailed", "transform step exceeded Lipschitz bound: " +
                                          std::to_string(after.lip_cert) + " > " +
                                          std::to_string(bound));
    }
}

}  // namespace

LipschitzGraph graph_transform_step(const SplitSystem& sys, const LipschitzGraph& graph,
                                    double fp_tol, int max_iter) {
    Workspace ws(sys);
    LipschitzGraph out = transform_once(sys, graph, ws, fp_tol, max_iter);
    remeasure_and_assert_lip(sys, graph, out);
    return out;
}

ManifoldResult compute_invariant_graph(const SplitSystem& sys, GraphDirection direction,
                                       const GraphTransformParams& params) {
    const auto& sp = sys.split;
    if (!(sp.b < sp.rho && sp.rho < sp.a))
        fail("NoSpectralGapAtRho", "split bounds do not straddle rho");
    if (smallness_margin(sys) <= 0) {
        double need = std::min(sp.rho - sp.b, sp.a - sp.rho) / 2.0;
        fail("SmallnessViolated", "need gamma < " + std::to_string(need) +
                                      " for b+2g < rho < a-2g, got gamma = " +
                                      std::to_string(sys.gamma));
    }

    const int dom_dim = direction == GraphDirection::Unstable ? sys.dim_u() : sys.dim_s();
    const int cod_dim = direction == GraphDirection::Unstable ? sys.dim_s() : sys.dim_u();

    GridSpec grid;
    grid.radius = params.radius;
    grid.nodes_per_axis = params.nodes_per_axis;
    if (grid.nodes_per_axis.empty())
        grid.nodes_per_axis.assign(static_cast<size_t>(dom_dim), 129);
    if (grid.nodes_per_axis.size() == 1 && dom_dim > 1)
        grid.nodes_per_axis.assign(static_cast<size_t>(dom_dim), grid.nodes_per_axis[0]);
    if (static_cast<int>(grid.nodes_per_axis.size()) != dom_dim)
        fail("ConfigInvalid", "nodes_per_axis does not match the graph domain dimension");
    grid.validate();

    LipschitzGraph theta = make_zero_graph(Vec::Zero(sys.dim()), direction, sp.rho, grid, cod_dim);

    NormFn dom_norm = direction == GraphDirection::Unstable ? sys.norm.norm_u_fn()
                                                            : sys.norm.norm_s_fn();
    NormFn cod_norm = direction == GraphDirection::Unstable ? sys.norm.norm_s_fn()
                                                            : sys.norm.norm_u_fn();

    ManifoldResult result;
    result.contraction_bound = (sp.b + 2.0 * sys.gamma) / (sp.a - 2.0 * sys.gamma);
    double denom_lip = sp.a - sp.b - 3.0 * sys.gamma;
    result.lip_bound = denom_lip > 0 ? sys.gamma / denom_lip
                                     : std::numeric_limits<double>::infinity();

    Workspace ws(sys);
    double prev_sup = -1.0, prev_rel = -1.0;
    const double ratio_floor = 100.0 * params.tol;
    for (int sweep = 1; sweep <= params.max_sweeps; ++sweep) {
        LipschitzGraph next = transform_once(sys, theta, ws, params.fp_tol, params.max_iter);
        remeasure_and_assert_lip(sys, theta, next);
        double d_sup = sup_node_distance(next, theta, cod_norm);
        double d_rel = relative_node_distance(next, theta, dom_norm, cod_norm);
        if (prev_sup > ratio_floor)
            result.contraction_sup = std::max(result.contraction_sup, d_sup / prev_sup);
        if (prev_rel > ratio_floor)
            result.contraction_metric = std::max(result.contraction_metric, d_rel / prev_rel);
        prev_sup = d_sup;
        prev_rel = d_rel;
        theta = std::move(next);
        result.sweeps = sweep;
        result.final_update = d_sup;
        if (d_sup <= params.tol) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged)
        fail("NotConverged", "graph transform did not converge in " +
                                 std::to_string(params.max_sweeps) + " sweeps (last update " +
                                 std::to_string(result.final_update) + ")");
    result.graph = std::move(theta);
    return result;
}

std::vector<Vec> backward_orbit_on_graph(const SplitSystem& sys, const LipschitzGraph& graph,
                                         const Vec& xi0, int steps, double fp_tol, int max_iter) {
    std::vector<Vec> orbit;
    Vec xi = xi0;
    orbit.push_back(sys.norm.from_coords(xi, graph.eval(xi)));
    for (int k = 0; k < steps; ++k) {
        xi = solve_preimage(sys, graph, xi, fp_tol, max_iter).xi;
        orbit.push_back(sys.norm.from_coords(xi, graph.eval(xi)));
    }
    return orbit;
}

Vec solve_backward_full(const SplitSystem& sys, const Vec& y, double fp_tol, int max_iter) {
    Eigen::PartialPivLU<Mat> lu(sys.split.matrix);
    Vec x = lu.solve(y);
    for (int k = 0; k < max_iter; ++k) {
        Vec next = lu.solve(y - sys.nonlinear(x));
        double res = sys.norm(next - x);
        x = next;
        if (res <= fp_tol) return x;
    }
    fail("ContractionFailed", "backward solve did not converge");
}

GraphVerifyReport verify_graph(const SplitSystem& sys, const LipschitzGraph& graph,
                               const GraphTransformParams& tparams,
                               const GraphVerifyParams& vparams) {
    GraphVerifyReport rep;
    const auto& sp = sys.split;
    const bool unstable = graph.direction == GraphDirection::Unstable;
    NormFn cod_norm = unstable ? sys.norm.norm_s_fn() : sys.norm.norm_u_fn();

    // Probe nodes: an even stride across the grid.
    const long long total = graph.grid.node_count();
    const long long stride = std::max(1LL, total / std::max(1, vparams.n_probe));
    std::vector<long long> probes;
    for (long long flat = 0; flat < total; flat += stride) probes.push_back(flat);

    // Forward invariance where the image stays over the grid: S maps graph
    // points to graph points. Probes mix grid nodes with random interior
    // points so interpolation error is part of the residual.
    Rng probe_rng(vparams.seed);
    int dd = graph.domain_dim();
    auto probe_at = [&](const Vec& dom) {
        Vec theta = graph.eval(dom);
        Vec x = unstable ? sys.norm.from_coords(dom, theta) : sys.norm.from_coords(theta, dom);
        Vec y = sys.map(x);
        Vec dom_img = unstable ? sys.norm.coords_u(y) : sys.norm.coords_s(y);
        if (dom_img.size() > 0 && dom_img.lpNorm<Eigen::Infinity>() > graph.grid.radius)
            return;  // image left the region; local invariance says nothing here
        Vec cod_img = unstable ? sys.norm.coords_s(y) : sys.norm.coords_u(y);
        double res = graph.codomain_dim > 0 ? cod_norm(cod_img - graph.eval(dom_img)) : 0.0;
        rep.invariance_residual = std::max(rep.invariance_residual, res);
    };
    for (long long flat : probes) probe_at(graph.grid.node(flat));
    for (int i = 0; i < vparams.n_probe; ++i)
        probe_at(probe_rng.uniform_vec(dd, -graph.grid.radius, graph.grid.radius));
    rep.invariance_ok = rep.invariance_residual <= vparams.invariance_tol;

    // Rate characterization along stored probes.
    rep.rate_bound = unstable ? 1.0 / (sp.a - 2.0 * sys.gamma) + vparams.rate_slack
                              : sp.b + 2.0 * sys.gamma + vparams.rate_slack;
    double max_rate = 0.0;
    for (long long flat : probes) {
        Vec dom = graph.grid.node(flat);
        if ((unstable ? sys.norm.norm_u(dom) : sys.norm.norm_s(dom)) < 1e-9) continue;
        if (unstable) {
            auto orbit = backward_orbit_on_graph(sys, graph, dom, vparams.rate_window,
                                                 tparams.fp_tol, tparams.max_iter);
            for (size_t j = 0; j + 1 < orbit.size(); ++j) {
                double n0 = sys.norm(orbit[j]), n1 = sys.norm(orbit[j + 1]);
                if (n0 > 1e3 * std::numeric_limits<double>::epsilon())
                    max_rate = std::max(max_rate, n1 / n0);
            }
        } else {
            Vec x = sys.norm.from_coords(graph.values[flat], dom);
            for (int j = 0; j < vparams.rate_window; ++j) {
                Vec y = sys.map(x);
                double n0 = sys.norm(x), n1 = sys.norm(y);
                if (n0 > 1e3 * std::numeric_limits<double>::epsilon())
                    max_rate = std::max(max_rate, n1 / n0);
                x = y;
            }
        }
    }
    rep.max_rate = max_rate;
    rep.rate_ok = max_rate <= rep.rate_bound;

    // Robustness of the fixed point to moving the splitting circle.
    if (vparams.check_rho_star) {
        double worst = 0.0;
        for (double sgn : {-1.0, 1.0}) {
            double rho_star = sp.rho * (1.0 + sgn * vparams.rho_star_frac);
            SplitLinearMap split2 = split_spectrum(sp.matrix, rho_star);
            SplitSystem sys2 = build_split_system_at_origin(sys.nonlinear, split2, sys.gamma,
                                                            sys.gamma_analytic,
                                                            sys.region_radius);
            ManifoldResult alt = compute_invariant_graph(sys2, graph.direction, tparams);
            worst = std::max(worst, sup_node_distance(alt.graph, graph, cod_norm));
        }
        rep.rho_star_sup_diff = worst;
        rep.rho_star_ok = worst <= vparams.rho_star_tol;
    }

    // Sufficient homeomorphism check gamma * ||L^{-1}|| < 1, when L is invertible.
    Eigen::FullPivLU<Mat> full_lu(sp.matrix);
    rep.homeo_applicable = full_lu.isInvertible();
    if (rep.homeo_applicable) {
        Mat Linv = full_lu.inverse();
        Rng rng(vparams.seed);
        double op = 0.0;
        for (int i = 0; i < 500; ++i) {
            Vec v = rng.direction(sys.dim());
            double nv = sys.norm(v);
            if (nv > 0) op = std::max(op, sys.norm(Linv * v) / nv);
        }
        rep.homeo_product = sys.gamma * op;
        rep.homeo_ok = rep.homeo_product < 1.0;
    }
    return rep;
}

}  // namespace lipdyn
