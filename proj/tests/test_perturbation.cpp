#include <cmath>

#include "doctest.h"
#include "lipdyn/models.hpp"
#include "lipdyn/perturbation.hpp"
#include "test_util.hpp"

using namespace lipdyn;
using testutil::thrown_code;
using testutil::v1;
using testutil::v2;

namespace {

SplitSystem system_of(const BuiltModel& bm) {
    return build_split_system(bm.model.evaluator, bm.x_star, *bm.split,
                              bm.gamma_analytic.value_or(0.0), true, bm.region_radius);
}

GraphTransformParams tp(double radius, int nodes) {
    GraphTransformParams p;
    p.radius = radius;
    p.nodes_per_axis = {nodes};
    return p;
}

// Newton on T(x) = x with finite-difference jacobians; the continuation oracle.
Vec newton_fixed_point(const MapFn& map, Vec x, int iters = 60) {
    int d = static_cast<int>(x.size());
    for (int i = 0; i < iters; ++i) {
        Mat j = numeric_jacobian(map, x) - Mat::Identity(d, d);
        x -= j.fullPivLu().solve(map(x) - x);
    }
    return x;
}

}  // namespace

TEST_SUITE("perturbation") {

TEST_CASE("closeness measurement separates sup and lipschitz deviation") {
    MapFn base = [](const Vec& x) { return Vec(2.0 * x); };
    auto same = measure_closeness(base, base, Vec::Zero(2), 1.0, euclidean_norm, 5000, 3);
    CHECK(same.sup_dev == 0.0);
    CHECK(same.lip_dev == 0.0);
    CHECK(same.value == 0.0);

    Vec c = v2(0.1, -0.2);
    MapFn shifted = [c](const Vec& x) { return Vec(2.0 * x + c); };
    auto est = measure_closeness(base, shifted, Vec::Zero(2), 1.0, euclidean_norm, 5000, 3);
    CHECK(est.sup_dev == doctest::Approx(c.norm() * 1.1).epsilon(1e-9));
    CHECK(est.lip_dev <= 1e-9);
    CHECK(est.value == est.sup_dev);

    MapFn tilted = [](const Vec& x) { return Vec(2.0 * x + 0.05 * x); };
    auto lest = measure_closeness(base, tilted, Vec::Zero(2), 1.0, euclidean_norm, 20000, 3);
    CHECK(lest.lip_dev == doctest::Approx(0.05 * 1.1).epsilon(0.02));
}

TEST_CASE("constant perturbation continues to the exact linear solve") {
    auto fam = make_builtin_family("linear_affine", {0.0, 0.1});
    auto sys = system_of(fam.base);
    auto cert = certify_hyperbolic(fam.base.model.evaluator, fam.base.x_star, *fam.base.split, 0.5);
    MapFn pert = fam.family.member(0.1);

    auto res = continue_equilibrium(sys, cert, pert, fam.base.x_star);
    Mat ImL = Mat::Identity(2, 2) - fam.base.split->matrix;
    Vec direct = ImL.fullPivLu().solve(Vec(0.1 * v2(-0.03, 0.12)));
    CHECK((res.x_star - direct).norm() <= 1e-10);
    CHECK(res.residual <= 1e-10);
    CHECK(res.displacement <= res.bound_delta1 + 1e-12);

    // Idempotence: continuing from the continued point under the same map.
    auto sys1 = build_split_system(pert, res.x_star, *fam.base.split, 0.0, true, 0.5);
    auto cert1 = certify_hyperbolic(pert, res.x_star, *fam.base.split, 0.5);
    auto res1 = continue_equilibrium(sys1, cert1, pert, res.x_star);
    CHECK(res1.displacement <= 1e-11);
}

TEST_CASE("violated smallness preconditions are named") {
    auto bm = make_builtin_model("linear_saddle");
    auto sys = system_of(bm);
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    MapFn pert = [](const Vec& x) { return Vec(2.0 * x); };
    ContinuationParams cp;
    cp.epsilon = 10.0;  // forces (gamma + eps) R >= 1
    CHECK(thrown_code([&] {
              continue_equilibrium(sys, cert, pert, bm.x_star, cp);
          }) == "PreconditionFailed");
    cp.epsilon = 0.2;   // contraction fine at R=4? (0+0.2)*4 < 1 fails too
    cp.epsilon = 0.05;  // (0.05 + 0) * 4 = 0.2 <= delta1 needs delta1 >= 0.26
    cp.delta1 = 0.1;
    CHECK(thrown_code([&] {
              continue_equilibrium(sys, cert, pert, bm.x_star, cp);
          }) == "PreconditionFailed");
}

TEST_CASE("family tracking matches the per-eta newton oracle") {
    auto fam = make_builtin_family("saddle_sin", {0.0, 0.01, 0.05, 0.1});
    auto cert = certify_hyperbolic(fam.base.model.evaluator, fam.base.x_star, *fam.base.split,
                                   0.4);
    REQUIRE(cert.strong_flag);
    EquilibriumRecord rec{0, fam.base.x_star, *fam.base.split, cert};
    auto rep = track_equilibrium_family(fam.family, {rec});
    CHECK(rep.count_preserved);
    CHECK(rep.displacement_monotone);
    CHECK(rep.max_eta_tracked == doctest::Approx(0.1));
    CHECK(rep.rows.size() == 3);

    const double R = cert.resolvent, g = cert.gamma;
    for (const auto& row : rep.rows) {
        // Internal bound and the closed-form eta bound both hold.
        CHECK(row.within_bound);
        CHECK(row.displacement <= row.bound + 1e-12);
        CHECK(row.displacement <= row.eta * R / (1.0 - (g + row.eta) * R) + 1e-12);
        Vec oracle = newton_fixed_point(fam.family.member(row.eta), fam.base.x_star);
        CHECK((row.x_star - oracle).norm() <= 1e-9);
    }
    // Rows are grouped by eta ascending; displacement grows with eta.
    for (size_t i = 1; i < rep.rows.size(); ++i)
        CHECK(rep.rows[i - 1].displacement <= rep.rows[i].displacement + 1e-12);
}

TEST_CASE("cubic family keeps all three equilibria") {
    auto fam = make_builtin_family("cubic1d_sin", {0.0, 0.01, 0.02});
    std::vector<EquilibriumRecord> recs;
    MapFn base = fam.family.member(0.0);
    int id = 0;
    for (const Vec& e : fam.base.equilibria) {
        Mat j = numeric_jacobian(base, e);
        auto split = split_spectrum(j, 1.0);
        auto cert = certify_hyperbolic(base, e, split, 0.05);
        REQUIRE(cert.strong_flag);
        recs.push_back({id++, e, split, cert});
    }
    auto rep = track_equilibrium_family(fam.family, recs);
    CHECK(rep.count_preserved);
    CHECK(rep.rows.size() == 6);

    // Dense root-scan oracle: T_eta has exactly three fixed points in the box,
    // each matching a tracked row.
    for (double eta : {0.01, 0.02}) {
        MapFn t = fam.family.member(eta);
        std::vector<double> roots;
        double prev_x = -2.2, prev_f = t(v1(prev_x))[0] - prev_x;
        for (int i = 1; i <= 44000; ++i) {
            double x = -2.2 + i * 1e-4;
            double f = t(v1(x))[0] - x;
            if (prev_f == 0.0 || (prev_f < 0) != (f < 0)) {
                double lo = prev_x, hi = x;
                for (int k = 0; k < 100; ++k) {
                    double mid = 0.5 * (lo + hi);
                    ((t(v1(mid))[0] - mid < 0) == (prev_f < 0) ? lo : hi) = mid;
                }
                roots.push_back(0.5 * (lo + hi));
            }
            prev_x = x;
            prev_f = f;
        }
        REQUIRE(roots.size() == 3);
        int matched = 0;
        for (const auto& row : rep.rows)
            if (row.eta == eta)
                for (double r : roots)
                    if (std::abs(row.x_star[0] - r) <= 1e-8) ++matched;
        CHECK(matched == 3);
    }
}

TEST_CASE("separation and certificate failures throw") {
    auto fam = make_builtin_family("cubic1d_sin", {0.0, 0.02});
    MapFn base = fam.family.member(0.0);
    Mat j = numeric_jacobian(base, fam.base.equilibria[0]);
    auto split = split_spectrum(j, 1.0);
    auto cert = certify_hyperbolic(base, fam.base.equilibria[0], split, 0.1);
    EquilibriumRecord a{0, fam.base.equilibria[0], split, cert};
    EquilibriumRecord b{1, v1(0.05), split, cert};  // artificially close twin
    CHECK(thrown_code([&] { track_equilibrium_family(fam.family, {a, b}); }) ==
          "SeparationViolated");
    HyperbolicCertificate weak = cert;
    weak.strong_flag = false;
    CHECK(thrown_code([&] {
              track_equilibrium_family(fam.family, {{0, fam.base.equilibria[0], split, weak}});
          }) == "SmallnessViolated");
}

TEST_CASE("manifold deviation bounds on the straightened saddle") {
    auto bm = make_builtin_model("sine_saddle", {{"gamma", 0.015}});
    auto sys = system_of(bm);
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    REQUIRE(cert.strong_flag);
    auto params = tp(1.0, 129);
    auto u = compute_invariant_graph(sys, GraphDirection::Unstable, params);
    auto s = compute_invariant_graph(sys, GraphDirection::Stable, params);
    auto st = straighten_coordinates(sys, cert, u.graph, s.graph, params);
    const SplitSystem& base = st.straightened;
    auto base_graph = compute_invariant_graph(base, GraphDirection::Unstable, params).graph;

    MapFn n0 = base.nonlinear;
    const int ds = base.dim_s();
    const AdaptedNorm& nm = base.norm;

    SUBCASE("unperturbed family has zero deviation") {
        std::vector<std::tuple<double, SplitSystem, LipschitzGraph>> rows;
        rows.emplace_back(0.0, base, base_graph);
        auto rep = manifold_deviation(base, base_graph, rows);
        CHECK(rep.all_ok);
        CHECK(rep.rows[0].sup_dev <= 1e-9);
    }

    SUBCASE("constant stable shift obeys the closed-form sup bound") {
        const double c = 0.02;
        for (double eta : {1.0, 0.5}) {
            Vec shift = nm.from_coords(Vec::Zero(1), Vec::Constant(ds, eta * c));
            MapFn neta = [n0, shift](const Vec& x) -> Vec { return n0(x) + shift; };
            auto psys = build_split_system_at_origin(neta, base.split, base.gamma,
                                                     base.gamma_analytic, base.region_radius);
            auto pg = compute_invariant_graph(psys, GraphDirection::Unstable, params).graph;
            std::vector<std::tuple<double, SplitSystem, LipschitzGraph>> rows;
            rows.emplace_back(eta, psys, pg);
            auto rep = manifold_deviation(base, base_graph, rows);
            CHECK(rep.all_ok);
            CHECK(rep.rows[0].sup_dev <=
                  eta * c / (1.0 - base.split.b - base.gamma) * 1.05);
        }
    }

    SUBCASE("sine-coupled family: both bounds hold and deviations shrink") {
        std::vector<std::tuple<double, SplitSystem, LipschitzGraph>> rows;
        for (double eta : {0.1, 0.01}) {
            MapFn neta = [n0, eta, &nm](const Vec& x) -> Vec {
                Vec cu = nm.coords_u(x);
                return n0(x) + nm.from_coords(Vec::Zero(1),
                                              Vec::Constant(1, eta * 0.2 * std::sin(cu[0])));
            };
            auto psys = build_split_system_at_origin(neta, base.split, base.gamma + eta * 0.2,
                                                     base.gamma_analytic, base.region_radius);
            auto pg = compute_invariant_graph(psys, GraphDirection::Unstable, params).graph;
            rows.emplace_back(eta, psys, pg);
        }
        auto rep = manifold_deviation(base, base_graph, rows);
        CHECK(rep.all_ok);
        CHECK(rep.rows[0].sup_dev > rep.rows[1].sup_dev);
        CHECK(rep.rows[1].sup_dev <= rep.rows[0].sup_dev * 0.2);
    }
}

TEST_CASE("stable nonlinearity shrinks on thinner tubes around the axis") {
    auto bm = make_builtin_model("sine_saddle", {{"gamma", 0.015}});
    auto sys = system_of(bm);
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    auto params = tp(1.0, 129);
    auto u = compute_invariant_graph(sys, GraphDirection::Unstable, params);
    auto s = compute_invariant_graph(sys, GraphDirection::Stable, params);
    auto st = straighten_coordinates(sys, cert, u.graph, s.graph, params);
    const SplitSystem& base = st.straightened;

    Rng rng(55);
    double prev = 1e9;
    for (double r : {0.5, 0.1, 0.02}) {
        double worst = 0.0;
        for (int i = 0; i < 40000; ++i) {
            Vec xi1 = Vec::Constant(1, rng.uniform(-0.8, 0.8));
            Vec xi2 = Vec::Constant(1, rng.uniform(-0.8, 0.8));
            Vec e1 = Vec::Constant(1, rng.uniform(-r, r));
            Vec e2 = Vec::Constant(1, rng.uniform(-r, r));
            Vec x = base.norm.from_coords(xi1, e1), y = base.norm.from_coords(xi2, e2);
            double d = base.norm(x - y);
            if (d < 1e-9) continue;
            worst = std::max(worst, base.norm.norm_s(base.n_s(x) - base.n_s(y)) / d);
        }
        CHECK(worst <= prev * 1.01);
        prev = worst;
    }
}

}  // TEST_SUITE
