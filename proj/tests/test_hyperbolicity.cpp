#include <cmath>

#include "doctest.h"
#include "lipdyn/hyperbolicity.hpp"
#include "lipdyn/models.hpp"
#include "test_util.hpp"

using namespace lipdyn;
using testutil::thrown_code;
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

}  // namespace

TEST_SUITE("hyperbolicity") {

TEST_CASE("lipschitz estimation: analytic passthrough and sampled quotients") {
    auto zero = estimate_lipschitz_constant([](const Vec& x) { return Vec(Vec::Zero(2)); }, 2,
                                            1.0, euclidean_norm, 1000, 5, 1.1, 0.0);
    CHECK(zero.value == 0.0);
    CHECK(zero.analytic);

    MapFn sine = [](const Vec& x) { return Vec(v2(0.0, 0.05 * std::sin(x[0]))); };
    auto est = estimate_lipschitz_constant(sine, 2, 1.0, euclidean_norm, 100000, 5);
    CHECK(!est.analytic);
    CHECK(est.value >= 0.045);
    CHECK(est.value <= 0.062);  // true constant 0.05, 10% inflation on top

    Mat c = 0.02 * Mat::Identity(2, 2);
    MapFn lin = [c](const Vec& x) { return Vec(c * x); };
    auto lest = estimate_lipschitz_constant(lin, 2, 1.0, euclidean_norm, 100000, 5);
    CHECK(lest.value >= 0.02 * 0.9);
    CHECK(lest.value <= 0.02 * 1.2);
}

TEST_CASE("linear saddle certifies with zero gamma and resolvent four") {
    auto bm = make_builtin_model("linear_saddle");
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    CHECK(cert.gamma <= 1e-9);
    CHECK(cert.weak_flag);
    CHECK(cert.strong_flag);
    CHECK(cert.resolvent == doctest::Approx(4.0).epsilon(0.05));
    CHECK(cert.isolation_radius > 0.0);
    CHECK(cert.gamma1_threshold > 0.0);
}

TEST_CASE("small bounded nonlinearity stays weakly hyperbolic") {
    MapFn t = [](const Vec& x) {
        return Vec(v2(2.0 * x[0] + 0.01 * std::sin(x[1]), 0.5 * x[1] + 0.01 * std::sin(x[0])));
    };
    auto split = split_spectrum((Mat(2, 2) << 2, 0, 0, 0.5).finished(), 1.0);
    auto cert = certify_hyperbolic(t, Vec::Zero(2), split, 0.5);
    CHECK(cert.weak_flag);
    // Sufficient smallness (a-1)(1-b)/(a(2-b)-1) at the margined a, b is ~1/4.
    double suff = (cert.a - 1) * (1 - cert.b) / (cert.a * (2 - cert.b) - 1);
    CHECK(cert.gamma <= suff);
}

TEST_CASE("large gamma violates the gap inequalities") {
    MapFn t = [](const Vec& x) {
        return Vec(v2(2.0 * x[0] + 0.4 * std::sin(x[1]), 0.5 * x[1] + 0.4 * std::sin(x[0])));
    };
    auto split = split_spectrum((Mat(2, 2) << 2, 0, 0, 0.5).finished(), 1.0);
    auto cert = certify_hyperbolic(t, Vec::Zero(2), split, 0.5);
    CHECK(!cert.weak_flag);
    CHECK(cert.failed_condition.find("b + 2 gamma") != std::string::npos);
    CertifyOptions req;
    req.require = CertLevel::Weak;
    CHECK(thrown_code([&] { certify_hyperbolic(t, Vec::Zero(2), split, 0.5, req); }) ==
          "SmallnessViolated");
}

TEST_CASE("certificates reject non-equilibria and unit-circle splits") {
    auto bm = make_builtin_model("linear_saddle");
    CHECK(thrown_code([&] {
              certify_hyperbolic(bm.model.evaluator, v2(0.3, 0.0), *bm.split, 0.5);
          }) == "NotAnEquilibrium");
}

TEST_CASE("certificate inequalities recompute from stored fields") {
    auto bm = make_builtin_model("sine_saddle");
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    CHECK(cert.weak_flag == (cert.b + 2 * cert.gamma < 1.0 && 1.0 < cert.a - 2 * cert.gamma &&
                             cert.gamma * cert.resolvent <= 1.0));
    CHECK(cert.strong_flag == (cert.weak_flag && cert.gamma < cert.gamma1_threshold));
    if (cert.strong_flag) CHECK(cert.isolation_radius > 0.0);
    CHECK(cert.epsilon0 ==
          doctest::Approx(std::min(1 - (cert.b + 2 * cert.gamma), cert.a - 2 * cert.gamma - 1) / 2));
}

TEST_CASE("straightening flattens both manifolds") {
    auto bm = make_builtin_model("sine_saddle", {{"gamma", 0.015}});
    auto sys = system_of(bm);
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    REQUIRE(cert.strong_flag);
    auto params = tp(1.0, 129);
    auto u = compute_invariant_graph(sys, GraphDirection::Unstable, params);
    auto s = compute_invariant_graph(sys, GraphDirection::Stable, params);
    auto res = straighten_coordinates(sys, cert, u.graph, s.graph, params);
    CHECK(res.unstable_flat_sup <= 1e-6);
    CHECK(res.stable_flat_sup <= 1e-6);
    // Conjugacy: g o S1 = S o g on sampled points.
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        Vec x = rng.uniform_vec(2, -0.4, 0.4);
        Vec lhs = res.g(res.straightened.map(x));
        Vec rhs = sys.map(res.g(x));
        CHECK((lhs - rhs).norm() <= 1e-8);
    }
    // Identity when there is nothing to straighten.
    auto lbm = make_builtin_model("linear_saddle");
    auto lsys = system_of(lbm);
    auto lcert = certify_hyperbolic(lbm.model.evaluator, lbm.x_star, *lbm.split, 0.5);
    auto lu = compute_invariant_graph(lsys, GraphDirection::Unstable, params);
    auto ls = compute_invariant_graph(lsys, GraphDirection::Stable, params);
    auto lres = straighten_coordinates(lsys, lcert, lu.graph, ls.graph, params);
    for (int i = 0; i < 100; ++i) {
        Vec x = Rng(i).uniform_vec(2, -0.5, 0.5);
        CHECK((lres.g(x) - x).norm() <= 1e-10);
    }
}

TEST_CASE("orbit dichotomy: exit or converge, nothing else") {
    auto bm = make_builtin_model("sine_saddle");
    auto sys = system_of(bm);
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    auto rep = orbit_dichotomy_check(sys, cert, 200, 400, 33);
    CHECK(rep.ok);
    CHECK(rep.n_undetermined == 0);
    CHECK(rep.n_exited + rep.n_converged == rep.n_samples);

    // The equilibrium itself stays put.
    Vec x = Vec::Zero(2);
    for (int i = 0; i < 50; ++i) x = sys.map(x);
    CHECK(x.norm() == 0.0);

    // A tiny unstable component escapes at rate at least a - gamma before exit.
    Vec y = sys.norm.from_coords(Vec::Constant(1, 1e-6), Vec::Zero(1));
    double prev = y.norm();
    for (int i = 0; i < 30 && y.norm() < cert.isolation_radius; ++i) {
        y = sys.map(y);
        CHECK(y.norm() >= (cert.a - cert.gamma) * prev * 0.999);
        prev = y.norm();
    }
    CHECK(prev > cert.isolation_radius * 0.5);
}

TEST_CASE("pseudo-orbit refinement collapses to the equilibrium") {
    auto bm = make_builtin_model("sine_saddle");
    auto sys = system_of(bm);
    auto cert = certify_hyperbolic(bm.model.evaluator, bm.x_star, *bm.split, 0.5);
    Rng rng(41);
    const double r = cert.isolation_radius;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vec> seq(21);
        for (auto& p : seq) p = rng.uniform_vec(2, -r, r);
        auto refined = pseudo_orbit_refine(sys, seq, 50);
        // The only global solution through the isolation ball is the equilibrium.
        CHECK(refined[refined.size() / 2].norm() <= 1e-8);
    }
}

TEST_CASE("strong threshold bisection brackets the inequality boundary") {
    double a = 1.99, b = 0.505, R = resolvent_bound(1.99, 0.505);
    double g1 = strong_gamma_threshold(a, b, R, 1, 1);
    CHECK(g1 > 0.0);
    // All straightening inequalities hold strictly just below the threshold
    // and at least one fails just above it.
    auto all_hold = [&](double g) {
        double f1 = straightened_lip_bound(a, b, g);
        return f1 > 0 && f1 * R < 1.0 && b + 2 * f1 < 1.0 && 1.0 < a - 2 * f1;
    };
    CHECK(all_hold(g1 * 0.999));
    CHECK(!all_hold(g1 * 1.01));
}

}  // TEST_SUITE
