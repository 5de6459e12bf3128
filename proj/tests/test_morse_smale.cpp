#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "lipdyn/models.hpp"
#include "lipdyn/morse_smale.hpp"
#include "test_util.hpp"

using namespace lipdyn;
using testutil::thrown_code;
using testutil::v1;

namespace {

NodeParams planar_node_params() {
    NodeParams np;
    np.delta = 0.03;
    return np;
}

std::vector<EquilibriumNode> build_nodes(const BuiltModel& model, const NodeParams& np) {
    std::vector<EquilibriumNode> nodes;
    for (std::size_t i = 0; i < model.equilibria.size(); ++i)
        nodes.push_back(make_equilibrium_node(model.model.evaluator, model.equilibria[i],
                                              static_cast<int>(i), np));
    return nodes;
}

DetectParams detect_params_for(const BuiltModel& model, int horizon) {
    DetectParams dp;
    dp.mesh_count = 16;
    dp.horizon = horizon;
    dp.domain_lo = model.model.domain_lo;
    dp.domain_hi = model.model.domain_hi;
    return dp;
}

std::set<std::pair<int, int>> edge_set(const ConnectionGraph& g) {
    std::set<std::pair<int, int>> s;
    for (const auto& e : g.edges) s.insert({e.source_id, e.target_id});
    return s;
}

// Kahn topological-sort oracle: true when the edge set has no directed cycle.
bool kahn_acyclic(const std::vector<std::pair<int, int>>& edges) {
    std::set<int> verts;
    std::map<int, int> indeg;
    std::map<int, std::vector<int>> adj;
    for (const auto& e : edges) {
        verts.insert(e.first);
        verts.insert(e.second);
        adj[e.first].push_back(e.second);
        ++indeg[e.second];
    }
    std::vector<int> q;
    for (int v : verts)
        if (indeg[v] == 0) q.push_back(v);
    std::size_t seen = 0;
    while (!q.empty()) {
        int v = q.back();
        q.pop_back();
        ++seen;
        for (int w : adj[v])
            if (--indeg[w] == 0) q.push_back(w);
    }
    return seen == verts.size();
}

bool is_cycle_of(const std::vector<int>& cyc, const std::vector<std::pair<int, int>>& edges) {
    if (cyc.empty()) return false;
    std::set<std::pair<int, int>> es(edges.begin(), edges.end());
    for (std::size_t i = 0; i < cyc.size(); ++i)
        if (!es.count({cyc[i], cyc[(i + 1) % cyc.size()]})) return false;
    return true;
}

}  // namespace

TEST_SUITE("morse_smale") {

TEST_CASE("equilibrium nodes carry local graphs matching the known manifolds") {
    auto model = make_builtin_model("planar_gradient");
    auto nodes = build_nodes(model, planar_node_params());
    REQUIRE(nodes.size() == 3);

    const auto& saddle = nodes[0];
    CHECK(saddle.cert.strong_flag);
    CHECK(saddle.sys.dim_u() == 1);
    CHECK(saddle.local_unstable.domain_dim() == 1);
    CHECK(saddle.local_unstable.grid.radius ==
          doctest::Approx(0.5 * saddle.cert.isolation_radius));
    // The unstable manifold is the first axis, the stable one the second; both
    // local graphs are exactly flat.
    for (const Vec& v : saddle.local_unstable.values) CHECK(v.norm() <= 1e-8);
    for (const Vec& v : saddle.local_stable.values) CHECK(v.norm() <= 1e-8);

    const auto& sink = nodes[1];
    CHECK(sink.sys.dim_u() == 0);
    CHECK(sink.local_unstable.domain_dim() == 0);
    CHECK(sink.cert.strong_flag);
}

TEST_CASE("saddle-to-sink connections are found with verified witnesses") {
    auto model = make_builtin_model("planar_gradient");
    auto nodes = build_nodes(model, planar_node_params());
    auto dp = detect_params_for(model, 200);

    auto out = detect_connection(model.model.evaluator, nodes[0], nodes[1], nodes, dp);
    REQUIRE(out.status == ConnectionStatus::Found);
    REQUIRE(out.witness.has_value());
    const auto& w = *out.witness;
    CHECK(w.source_id == 0);
    CHECK(w.target_id == 1);
    CHECK(w.entry_index > 0);
    CHECK(w.entry_index < 60);
    CHECK(w.backward_ok);
    CHECK(w.backward_factor <=
          (1.0 + dp.backward_slack) / (nodes[0].split.a - 2.0 * nodes[0].sys.gamma));

    // Stored witness orbits re-simulate exactly.
    REQUIRE(w.orbit.size() > 1);
    Vec x = w.orbit.front();
    for (std::size_t k = 1; k < w.orbit.size(); ++k) {
        x = model.model.evaluator(x);
        CHECK((x - w.orbit[k]).norm() <= 1e-9);
    }

    // Nothing leaves a sink.
    auto back = detect_connection(model.model.evaluator, nodes[1], nodes[0], nodes, dp);
    CHECK(back.status == ConnectionStatus::Absent);
    CHECK(back.orbits.empty());
    auto cross = detect_connection(model.model.evaluator, nodes[1], nodes[2], nodes, dp);
    CHECK(cross.status == ConnectionStatus::Absent);
}

TEST_CASE("planar gradient connection graph is acyclic with two edges") {
    auto model = make_builtin_model("planar_gradient");
    auto nodes = build_nodes(model, planar_node_params());
    BuildGraphParams gp;
    gp.detect = detect_params_for(model, 200);
    gp.dg1_samples = 100;
    gp.dg1_horizon = 300;
    auto graph = build_connection_graph(model.model.evaluator, nodes, gp);

    CHECK(edge_set(graph) == std::set<std::pair<int, int>>{{0, 1}, {0, 2}});
    CHECK(graph.dg_flag);
    CHECK(graph.cycle.empty());
    CHECK(graph.transitive_ok);
    CHECK(graph.inconclusive.empty());
    CHECK(graph.dg1.ok);
    CHECK(graph.dg1.n_wandering == 0);
    CHECK(graph.nodes.size() == 3);
    CHECK(graph.nodes[0].dim_u == 1);
    CHECK(graph.nodes[1].dim_u == 0);
}

TEST_CASE("scalar cubic edges agree with direct orbit simulation") {
    auto model = make_builtin_model("cubic1d");
    NodeParams np;
    np.delta = 0.1;
    auto nodes = build_nodes(model, np);
    BuildGraphParams gp;
    gp.detect = detect_params_for(model, 300);
    gp.dg1_samples = 50;
    auto graph = build_connection_graph(model.model.evaluator, nodes, gp);

    // Oracle: iterate the map from just off the source; whichever sink ball the
    // orbit settles in is a connection.
    std::set<std::pair<int, int>> oracle;
    for (double s : {0.01, -0.01}) {
        Vec x = v1(s);
        for (int k = 0; k < 300; ++k) x = model.model.evaluator(x);
        for (std::size_t n = 0; n < nodes.size(); ++n)
            if ((x - nodes[n].x_star).norm() < nodes[n].cert.isolation_radius)
                oracle.insert({0, static_cast<int>(n)});
    }
    CHECK(oracle == std::set<std::pair<int, int>>{{0, 1}, {0, 2}});
    CHECK(edge_set(graph) == oracle);
    CHECK(graph.dg_flag);
}

TEST_CASE("a lone linear sink yields the empty acyclic graph") {
    MapFn half = [](const Vec& x) { return Vec(0.5 * x); };
    NodeParams np;
    np.delta = 0.2;
    auto node = make_equilibrium_node(half, v1(0.0), 0, np);
    CHECK(node.sys.dim_u() == 0);
    BuildGraphParams gp;
    gp.detect.domain_lo = v1(-1.0);
    gp.detect.domain_hi = v1(1.0);
    gp.dg1_samples = 40;
    auto graph = build_connection_graph(half, {node}, gp);
    CHECK(graph.edges.empty());
    CHECK(graph.dg_flag);
    CHECK(graph.dg1.ok);
}

TEST_CASE("cycle finder agrees with a topological-sort oracle") {
    using Edges = std::vector<std::pair<int, int>>;
    CHECK(find_directed_cycle({}).empty());
    CHECK(find_directed_cycle({{0, 1}, {1, 2}, {0, 2}}).empty());

    auto self_loop = find_directed_cycle({{0, 1}, {2, 2}});
    CHECK(self_loop == std::vector<int>{2});

    Edges tri = {{0, 1}, {1, 2}, {2, 0}};
    auto cyc = find_directed_cycle(tri);
    CHECK(cyc.size() == 3);
    CHECK(is_cycle_of(cyc, tri));

    Edges tailed = {{7, 0}, {0, 1}, {1, 2}, {2, 1}};
    auto c2 = find_directed_cycle(tailed);
    CHECK(is_cycle_of(c2, tailed));

    Rng rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        Edges es;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (i != j && rng.uniform01() < 0.18) es.push_back({i, j});
        auto found = find_directed_cycle(es);
        if (kahn_acyclic(es))
            CHECK(found.empty());
        else
            CHECK(is_cycle_of(found, es));
    }
}

TEST_CASE("competitive cyclic dynamics fail the acyclicity check") {
    auto model = make_builtin_model("may_leonard");
    NodeParams np;
    np.delta = 0.005;
    auto nodes = build_nodes(model, np);
    REQUIRE(nodes.size() == 3);
    BuildGraphParams gp;
    gp.detect = detect_params_for(model, 400);
    gp.dg1_samples = 30;
    gp.dg1_horizon = 100;
    auto graph = build_connection_graph(model.model.evaluator, nodes, gp);

    CHECK(!graph.dg_flag);
    REQUIRE(!graph.cycle.empty());
    std::vector<std::pair<int, int>> es;
    for (const auto& e : graph.edges) es.push_back({e.source_id, e.target_id});
    CHECK(is_cycle_of(graph.cycle, es));
    CHECK(graph.cycle.size() == 3);
}

TEST_CASE("geometric equivalence reports exact edge discrepancies") {
    auto model = make_builtin_model("planar_gradient");
    auto nodes = build_nodes(model, planar_node_params());
    BuildGraphParams gp;
    gp.detect = detect_params_for(model, 200);
    gp.dg1_samples = 20;
    auto graph = build_connection_graph(model.model.evaluator, nodes, gp);

    auto self_eq = check_geometric_equivalence(graph, graph);
    CHECK(self_eq.equivalent);
    CHECK(self_eq.missing_in_b.empty());
    CHECK(self_eq.missing_in_a.empty());

    ConnectionGraph pruned = graph;
    std::pair<int, int> dropped{pruned.edges.back().source_id, pruned.edges.back().target_id};
    pruned.edges.pop_back();
    auto eq = check_geometric_equivalence(graph, pruned);
    CHECK(!eq.equivalent);
    REQUIRE(eq.missing_in_b.size() == 1);
    CHECK(eq.missing_in_b[0] == dropped);
    CHECK(eq.missing_in_a.empty());

    // The two sinks may be swapped by an explicit pairing.
    auto swapped = check_geometric_equivalence(graph, graph, {0, 2, 1});
    CHECK(swapped.equivalent);

    ConnectionGraph tiny;
    tiny.nodes.resize(1);
    CHECK(thrown_code([&] { check_geometric_equivalence(graph, tiny); }) ==
          "NodeCountMismatch");
}

TEST_CASE("cubic family keeps its connection graph across the perturbation") {
    auto fam = make_builtin_family("cubic1d_sin", {0.0, 0.02});
    StabilityParams sp;
    sp.node.delta = 0.1;
    sp.graph.detect = detect_params_for(fam.base, 300);
    sp.graph.dg1_samples = 30;
    sp.graph.dg1_horizon = 300;
    auto rep = run_stability_experiment(fam.family, fam.base.equilibria, sp);

    CHECK(rep.base_graph.dg_flag);
    CHECK(edge_set(rep.base_graph) == std::set<std::pair<int, int>>{{0, 1}, {0, 2}});
    REQUIRE(rep.stages.size() == 1);
    const auto& st = rep.stages[0];
    CHECK(st.eta == doctest::Approx(0.02));
    CHECK(st.continued_ok);
    CHECK(st.certs_ok);
    CHECK(st.equivalent);
    CHECK(st.n_edges == 2);
    CHECK(rep.all_equivalent);
    CHECK(rep.largest_equivalent_eta == doctest::Approx(0.02));
}

}  // TEST_SUITE
