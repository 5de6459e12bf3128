#include "lipdyn/morse_smale.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace lipdyn {

EquilibriumNode make_equilibrium_node(const MapFn& map, const Vec& x_star, int id,
                                      const NodeParams& params) {
    EquilibriumNode node;
    node.id = id;
    node.x_star = x_star;
    Mat J = numeric_jacobian(map, x_star);
    node.split = split_spectrum(J, params.rho);
    CertifyOptions opts = params.certify;
    node.cert = certify_hyperbolic(map, x_star, node.split, params.delta, opts);
    if (!node.cert.strong_flag)
        fail("SmallnessViolated", "equilibrium " + std::to_string(id) +
                                      " is not strongly certified: " +
                                      node.cert.failed_condition);
    node.sys = build_split_system(map, x_star, node.split, node.cert.gamma,
                                  node.cert.gamma_analytic, node.cert.delta);

    const double r_loc = params.chart_radius_frac * node.cert.isolation_radius;
    auto side_graph = [&](GraphDirection dir, int dim_dom, int dim_cod) {
        if (dim_dom > 0 && dim_dom <= params.max_graph_dim) {
            GraphTransformParams tp = params.transform;
            tp.radius = r_loc;
            if (tp.nodes_per_axis.empty())
                tp.nodes_per_axis.assign(static_cast<std::size_t>(dim_dom),
                                         dim_dom == 1 ? 129 : (dim_dom == 2 ? 33 : 9));
            return compute_invariant_graph(node.sys, dir, tp).graph;
        }
        // Degenerate or too wide to grid: keep the trivial chart.
        GridSpec empty;
        empty.radius = r_loc;
        return make_zero_graph(x_star, dir, params.rho, empty, dim_cod);
    };
    node.local_unstable =
        side_graph(GraphDirection::Unstable, node.sys.dim_u(), node.sys.dim_s());
    node.local_stable = side_graph(GraphDirection::Stable, node.sys.dim_s(), node.sys.dim_u());
    return node;
}

namespace {

std::vector<Vec> unstable_sphere_mesh(int dim_u, double radius, int count) {
    std::vector<Vec> pts;
    if (dim_u == 0) return pts;
    if (dim_u == 1) {
        pts.push_back(Vec::Constant(1, radius));
        pts.push_back(Vec::Constant(1, -radius));
        return pts;
    }
    if (dim_u == 2) {
        for (int k = 0; k < count; ++k) {
            double ang = 2.0 * M_PI * k / count;
            Vec p(2);
            p << radius * std::cos(ang), radius * std::sin(ang);
            pts.push_back(p);
        }
        return pts;
    }
    if (dim_u == 3) {
        // Fibonacci lattice on the sphere.
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (int k = 0; k < count; ++k) {
            double z = 1.0 - (2.0 * k + 1.0) / count;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double ang = 2.0 * M_PI * k / golden;
            Vec p(3);
            p << radius * r * std::cos(ang), radius * r * std::sin(ang), radius * z;
            pts.push_back(p);
        }
        return pts;
    }
    fail("ConfigInvalid", "sphere meshes support at most three unstable axes");
}

bool in_box(const Vec& x, const Vec& lo, const Vec& hi) {
    if (lo.size() != x.size()) return true;  // no box supplied
    for (int i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

double ball_distance(const EquilibriumNode& node, const Vec& x) {
    return node.sys.norm(x - node.x_star);
}

// Forward orbit from a mesh start. Confirmed entries into isolation balls are
// logged; the orbit ends on convergence inside a ball, box exit, or horizon.
MeshOrbit run_orbit(const MapFn& map, int mesh_index, const Vec& start, int source_id,
                    const std::vector<EquilibriumNode>& nodes, const DetectParams& params) {
    MeshOrbit orbit;
    orbit.mesh_index = mesh_index;
    orbit.points.push_back(start);
    std::vector<char> credited(nodes.size(), 0);
    std::vector<char> inside(nodes.size(), 0);
    std::vector<int> shrink_run(nodes.size(), 0);
    std::vector<int> entry_at(nodes.size(), -1);
    std::vector<double> prev_dist(nodes.size(), 0.0);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        // Starting inside a ball (the source's own) must not count as an entry.
        if (ball_distance(nodes[n], start) <= nodes[n].cert.isolation_radius) inside[n] = 1;
        prev_dist[n] = ball_distance(nodes[n], start);
    }

    Vec x = start;
    for (int step = 1; step <= params.horizon; ++step) {
        Vec next = map(x);
        if (!all_finite(next)) {
            orbit.terminal = OrbitTerminal::ExitedDomain;
            return orbit;
        }
        double move = (next - x).norm();
        x = next;
        orbit.points.push_back(x);
        if (!in_box(x, params.domain_lo, params.domain_hi)) {
            orbit.terminal = OrbitTerminal::ExitedDomain;
            return orbit;
        }
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            double d = ball_distance(nodes[n], x);
            bool now_inside = d <= nodes[n].cert.isolation_radius;
            if (!inside[n] && now_inside) {
                inside[n] = 1;
                shrink_run[n] = 0;
                entry_at[n] = step;
            } else if (inside[n] && now_inside && !credited[n]) {
                if (d <= params.shrink_factor * prev_dist[n])
                    ++shrink_run[n];
                else
                    shrink_run[n] = 0;
                if (shrink_run[n] >= params.k_confirm) {
                    credited[n] = 1;
                    orbit.hits.push_back({nodes[n].id, entry_at[n]});
                }
            } else if (inside[n] && !now_inside) {
                inside[n] = 0;
                shrink_run[n] = 0;
            }
            prev_dist[n] = d;
        }
        if (move <= params.conv_tol) {
            for (std::size_t n = 0; n < nodes.size(); ++n)
                if (inside[n]) {
                    if (!credited[n]) orbit.hits.push_back({nodes[n].id, entry_at[n]});
                    orbit.terminal = OrbitTerminal::ConvergedInBall;
                    return orbit;
                }
            orbit.terminal = OrbitTerminal::HorizonEnd;
            return orbit;
        }
        // A confirmed arrival at a sink ends the orbit; nothing leaves.
        for (std::size_t n = 0; n < nodes.size(); ++n)
            if (credited[n] && inside[n] && nodes[n].sys.dim_u() == 0) {
                orbit.terminal = OrbitTerminal::ConvergedInBall;
                return orbit;
            }
        (void)source_id;
    }
    orbit.terminal = OrbitTerminal::HorizonEnd;
    return orbit;
}

std::vector<MeshOrbit> run_mesh(const MapFn& map, const EquilibriumNode& source,
                                const std::vector<EquilibriumNode>& nodes,
                                const DetectParams& params) {
    std::vector<MeshOrbit> orbits;
    const int du = source.sys.dim_u();
    if (du == 0) return orbits;
    const double r_loc = source.local_unstable.grid.radius;
    auto mesh = unstable_sphere_mesh(du, r_loc, params.mesh_count);
    for (std::size_t m = 0; m < mesh.size(); ++m) {
        Vec xi = mesh[m];
        Vec value = source.local_unstable.eval(xi);
        Vec start = source.x_star + source.sys.norm.from_coords(xi, value);
        orbits.push_back(run_orbit(map, static_cast<int>(m), start, source.id, nodes, params));
    }
    return orbits;
}

ConnectionWitness witness_from_orbit(const EquilibriumNode& source, const MeshOrbit& orbit,
                                     int target_id, const DetectParams& params) {
    ConnectionWitness w;
    w.source_id = source.id;
    w.target_id = target_id;
    w.mesh_index = orbit.mesh_index;
    w.orbit = orbit.points;
    for (const auto& h : orbit.hits)
        if (h.node_id == target_id) {
            w.entry_index = h.entry_index;
            break;
        }
    // Backward tail: mesh starts sit on the local unstable graph, so preimage
    // chaining applies; contraction factor 1/(a - 2 gamma) expected.
    const double du = source.local_unstable.grid.radius;
    auto mesh = unstable_sphere_mesh(source.sys.dim_u(), du, params.mesh_count);
    Vec xi0 = mesh[static_cast<std::size_t>(orbit.mesh_index)];
    try {
        auto tail = backward_orbit_on_graph(source.sys, source.local_unstable, xi0,
                                            params.backward_steps);
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < tail.size(); ++k) {
            double n0 = source.sys.norm(tail[k]);
            double n1 = source.sys.norm(tail[k + 1]);
            if (n0 > 1e-14) worst = std::max(worst, n1 / n0);
        }
        w.backward_factor = worst;
        double bound = 1.0 / (source.split.a - 2.0 * source.sys.gamma);
        w.backward_ok = worst <= bound * (1.0 + params.backward_slack);
    } catch (const Error&) {
        w.backward_factor = std::numeric_limits<double>::infinity();
        w.backward_ok = false;
    }
    return w;
}

}  // namespace

ConnectionOutcome detect_connection(const MapFn& map, const EquilibriumNode& source,
                                    const EquilibriumNode& target,
                                    const std::vector<EquilibriumNode>& all_nodes,
                                    const DetectParams& params) {
    ConnectionOutcome out;
    out.orbits = run_mesh(map, source, all_nodes, params);
    bool unresolved = false;
    for (const auto& orbit : out.orbits) {
        if (orbit.terminal == OrbitTerminal::HorizonEnd) unresolved = true;
        for (const auto& h : orbit.hits)
            if (h.node_id == target.id && !out.witness) {
                out.witness = witness_from_orbit(source, orbit, target.id, params);
                out.status = ConnectionStatus::Found;
            }
    }
    if (out.status == ConnectionStatus::Found) return out;
    if (!unresolved) {
        out.status = ConnectionStatus::Absent;
        return out;
    }
    fail("HorizonExceeded", "orbits from equilibrium " + std::to_string(source.id) +
                                " were not all resolved within the horizon");
}

std::vector<int> find_directed_cycle(const std::vector<std::pair<int, int>>& edges) {
    for (const auto& e : edges)
        if (e.first == e.second) return {e.first};
    std::map<int, std::vector<int>> adj;
    std::set<int> verts;
    for (const auto& e : edges) {
        adj[e.first].push_back(e.second);
        verts.insert(e.first);
        verts.insert(e.second);
    }
    std::map<int, int> state;  // 0 new, 1 open, 2 done
    std::vector<int> stack, cycle;
    std::function<bool(int)> dfs = [&](int v) -> bool {
        state[v] = 1;
        stack.push_back(v);
        for (int w : adj[v]) {
            if (state[w] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                cycle.assign(it, stack.end());
                return false;
            }
            if (state[w] == 0 && !dfs(w)) return false;
        }
        stack.pop_back();
        state[v] = 2;
        return true;
    };
    for (int v : verts)
        if (state[v] == 0 && !dfs(v)) break;
    return cycle;
}

ConnectionGraph build_connection_graph(const MapFn& map,
                                       const std::vector<EquilibriumNode>& nodes,
                                       const BuildGraphParams& params) {
    ConnectionGraph g;
    for (const auto& n : nodes) {
        NodeSummary s;
        s.id = n.id;
        s.x_star = n.x_star;
        s.dim_u = n.sys.dim_u();
        s.dim_s = n.sys.dim_s();
        s.a = n.split.a;
        s.b = n.split.b;
        s.gamma = n.sys.gamma;
        s.isolation_radius = n.cert.isolation_radius;
        s.strong = n.cert.strong_flag;
        g.nodes.push_back(std::move(s));
    }

    std::set<std::pair<int, int>> edge_set;
    for (const auto& source : nodes) {
        auto orbits = run_mesh(map, source, nodes, params.detect);
        bool source_unresolved = false;
        std::set<int> hit_ids;
        for (const auto& orbit : orbits) {
            if (orbit.terminal == OrbitTerminal::HorizonEnd) source_unresolved = true;
            for (const auto& h : orbit.hits) {
                hit_ids.insert(h.node_id);
                if (!edge_set.count({source.id, h.node_id})) {
                    edge_set.insert({source.id, h.node_id});
                    g.edges.push_back(
                        witness_from_orbit(source, orbit, h.node_id, params.detect));
                }
            }
        }
        if (source_unresolved)
            for (const auto& t : nodes)
                if (!hit_ids.count(t.id)) g.inconclusive.push_back({source.id, t.id});
    }

    // Acyclicity: self-edges or directed cycles clear the flag.
    std::vector<std::pair<int, int>> edge_pairs;
    for (const auto& e : g.edges) edge_pairs.push_back({e.source_id, e.target_id});
    g.cycle = find_directed_cycle(edge_pairs);
    g.dg_flag = g.cycle.empty();

    for (const auto& e1 : g.edges)
        for (const auto& e2 : g.edges)
            if (e1.target_id == e2.source_id && e1.source_id != e2.target_id)
                if (!edge_set.count({e1.source_id, e2.target_id})) {
                    g.transitive_ok = false;
                    g.transitivity_gaps.push_back({e1.source_id, e1.target_id, e2.target_id});
                }

    // Almost-every-orbit check: random starts in the box must settle in a ball.
    Dg1Report dg1;
    if (params.detect.domain_lo.size() > 0) {
        Rng rng(params.seed);
        const int dim = static_cast<int>(params.detect.domain_lo.size());
        dg1.n_samples = params.dg1_samples;
        for (int i = 0; i < params.dg1_samples; ++i) {
            Vec x(dim);
            for (int k = 0; k < dim; ++k)
                x[k] = params.detect.domain_lo[k] +
                       rng.uniform01() * (params.detect.domain_hi[k] - params.detect.domain_lo[k]);
            bool escaped = false, settled = false;
            for (int step = 0; step < params.dg1_horizon; ++step) {
                Vec next = map(x);
                if (!all_finite(next) || !in_box(next, params.detect.domain_lo,
                                                 params.detect.domain_hi)) {
                    escaped = true;
                    break;
                }
                double move = (next - x).norm();
                x = next;
                if (move <= 1e-9) {
                    for (const auto& n : nodes)
                        if (ball_distance(n, x) <= n.cert.isolation_radius) settled = true;
                    break;
                }
            }
            if (escaped)
                ++dg1.n_escaped;
            else if (settled)
                ++dg1.n_settled;
            else
                ++dg1.n_wandering;
        }
        dg1.ok = dg1.n_wandering == 0;
    }
    g.dg1 = dg1;
    return g;
}

EquivalenceReport check_geometric_equivalence(const ConnectionGraph& a, const ConnectionGraph& b,
                                              const std::vector<int>& pairing) {
    if (a.nodes.size() != b.nodes.size())
        fail("NodeCountMismatch", "graphs have " + std::to_string(a.nodes.size()) + " and " +
                                      std::to_string(b.nodes.size()) + " nodes");
    std::map<int, int> to_b;
    if (pairing.empty()) {
        for (const auto& n : a.nodes) to_b[n.id] = n.id;
    } else {
        if (pairing.size() != a.nodes.size())
            fail("NodeCountMismatch", "pairing size does not match the node count");
        for (std::size_t i = 0; i < a.nodes.size(); ++i) to_b[a.nodes[i].id] = pairing[i];
    }
    std::set<std::pair<int, int>> ea, eb;
    for (const auto& e : a.edges) ea.insert({to_b[e.source_id], to_b[e.target_id]});
    for (const auto& e : b.edges) eb.insert({e.source_id, e.target_id});
    EquivalenceReport rep;
    for (const auto& e : ea)
        if (!eb.count(e)) rep.missing_in_b.push_back(e);
    for (const auto& e : eb)
        if (!ea.count(e)) rep.missing_in_a.push_back(e);
    rep.equivalent = rep.missing_in_a.empty() && rep.missing_in_b.empty();
    return rep;
}

StabilityReport run_stability_experiment(const PerturbationFamily& family,
                                         const std::vector<Vec>& base_equilibria,
                                         const StabilityParams& params) {
    StabilityReport report;
    MapFn base_map = family.member(0.0);
    std::vector<EquilibriumNode> base_nodes;
    for (std::size_t i = 0; i < base_equilibria.size(); ++i)
        base_nodes.push_back(
            make_equilibrium_node(base_map, base_equilibria[i], static_cast<int>(i), params.node));
    report.base_graph = build_connection_graph(base_map, base_nodes, params.graph);

    for (double eta : family.etas) {
        if (eta <= 0.0) continue;
        StabilityStage stage;
        stage.eta = eta;
        MapFn pert = family.member(eta);
        std::vector<Vec> continued;
        bool ok = true;
        for (const auto& node : base_nodes) {
            try {
                auto res = continue_equilibrium(node.sys, node.cert, pert, node.x_star,
                                                params.continuation);
                continued.push_back(res.x_star);
                stage.max_displacement = std::max(stage.max_displacement, res.displacement);
                stage.epsilon = std::max(stage.epsilon, res.epsilon_used);
            } catch (const Error& e) {
                stage.note = "continuation of equilibrium " + std::to_string(node.id) +
                             " failed: " + e.what();
                ok = false;
                break;
            }
        }
        stage.continued_ok = ok;
        if (ok) {
            std::vector<EquilibriumNode> pert_nodes;
            try {
                for (std::size_t i = 0; i < continued.size(); ++i)
                    pert_nodes.push_back(make_equilibrium_node(pert, continued[i],
                                                               static_cast<int>(i), params.node));
                stage.certs_ok = true;
            } catch (const Error& e) {
                stage.note = std::string("recertification failed: ") + e.what();
            }
            if (stage.certs_ok) {
                stage.graph = build_connection_graph(pert, pert_nodes, params.graph);
                stage.n_edges = static_cast<int>(stage.graph.edges.size());
                auto eq = check_geometric_equivalence(report.base_graph, stage.graph);
                stage.equivalent = eq.equivalent;
                if (stage.equivalent)
                    report.largest_equivalent_eta =
                        std::max(report.largest_equivalent_eta, eta);
            }
        }
        if (!stage.equivalent) report.all_equivalent = false;
        report.stages.push_back(std::move(stage));
    }
    return report;
}

}  // namespace lipdyn
