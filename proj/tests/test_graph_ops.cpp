#include <cmath>

#include "doctest.h"
#include "lipdyn/graph_ops.hpp"
#include "test_util.hpp"

using namespace lipdyn;
using testutil::thrown_code;
using testutil::v1;
using testutil::v2;

namespace {

LipschitzGraph sine_graph(double amp, double radius, int nodes) {
    LipschitzGraph g;
    g.base_point = Vec::Zero(2);
    g.direction = GraphDirection::Unstable;
    g.rho = 1.0;
    g.grid.radius = radius;
    g.grid.nodes_per_axis = {nodes};
    g.codomain_dim = 1;
    for (long long i = 0; i < g.grid.node_count(); ++i)
        g.values.push_back(v1(amp * std::sin(g.grid.node(i)[0])));
    g.lip_cert = measure_edge_lipschitz(g, euclidean_norm, euclidean_norm);
    return g;
}

// Scalar bisection for f(x) = target, f strictly increasing on [lo, hi].
double bisect(const std::function<double(double)>& f, double target, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("graph_ops") {

TEST_CASE("identity inverts to the target itself") {
    MapFn id = [](const Vec& x) { return x; };
    auto ni = measure_near_identity(id, 2, 1.0, euclidean_norm, 2000, 5);
    CHECK(ni.sup_dev == 0.0);
    CHECK(ni.lip_dev == 0.0);
    Vec y = v2(0.3, -0.7);
    CHECK((invert_near_identity(ni, y, euclidean_norm) - y).norm() == 0.0);
}

TEST_CASE("scalar inversion agrees with bisection") {
    MapFn g = [](const Vec& x) { return Vec(v1(x[0] + 0.1 * std::sin(x[0]))); };
    auto ni = measure_near_identity(g, 1, 1.0, euclidean_norm, 20000, 5);
    CHECK(ni.sup_dev == doctest::Approx(0.1 * std::sin(1.0) * 1.1).epsilon(1e-3));
    CHECK(ni.lip_dev <= 0.1 * 1.1 + 1e-6);
    CHECK(ni.lip_dev >= 0.09);

    Vec x = invert_near_identity(ni, v1(0.5), euclidean_norm, 1e-13);
    double oracle = bisect([](double t) { return t + 0.1 * std::sin(t); }, 0.5, 0.0, 1.0);
    CHECK(x[0] == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("round trips, containment, and the inverse Lipschitz bound") {
    MapFn g = [](const Vec& x) -> Vec {
        return x + 0.04 * v2(std::sin(x[0] + 2.0 * x[1]), std::cos(2.0 * x[0]));
    };
    auto ni = measure_near_identity(g, 2, 1.0, euclidean_norm, 20000, 7);
    REQUIRE(ni.lip_dev < 0.5);

    Rng rng(13);
    double worst_trip = 0.0, worst_norm = 0.0;
    int misses = 0;
    std::vector<Vec> ys, xs;
    for (int i = 0; i < 1000; ++i) {
        Vec dir = rng.direction(2);
        Vec y = dir * (ni.radius - ni.sup_dev) * rng.uniform01();
        Vec x = invert_near_identity(ni, y, euclidean_norm);
        worst_trip = std::max(worst_trip, (g(x) - y).norm());
        worst_norm = std::max(worst_norm, x.norm());
        if (x.norm() > ni.radius) ++misses;
        ys.push_back(y);
        xs.push_back(x);
    }
    CHECK(worst_trip <= 1e-10);
    CHECK(misses == 0);
    CHECK(worst_norm <= ni.radius);

    double worst_q = 0.0;
    for (size_t i = 1; i < xs.size(); ++i) {
        double dy = (ys[i] - ys[i - 1]).norm();
        if (dy > 1e-9) worst_q = std::max(worst_q, (xs[i] - xs[i - 1]).norm() / dy);
    }
    CHECK(worst_q <= 1.0 / (1.0 - ni.lip_dev) * 1.05);
}

TEST_CASE("inversion guards reject bad data") {
    MapFn far = [](const Vec& x) { return Vec(1.6 * x); };
    auto bad = measure_near_identity(far, 1, 1.0, euclidean_norm, 2000, 5);
    CHECK(bad.lip_dev >= 0.5);
    CHECK(thrown_code([&] { invert_near_identity(bad, v1(0.1), euclidean_norm); }) ==
          "NotNearIdentity");

    MapFn g = [](const Vec& x) { return Vec(v1(x[0] + 0.05 * std::sin(x[0]))); };
    auto ni = measure_near_identity(g, 1, 1.0, euclidean_norm, 20000, 5);
    CHECK(thrown_code([&] { invert_near_identity(ni, v1(0.98), euclidean_norm); }) ==
          "TargetOutsideGuaranteedImage");
}

TEST_CASE("parametrization already in graph form is returned unchanged") {
    auto theta = sine_graph(0.2, 1.0, 257);
    ParamFn psi = [&](const Vec& xi) {
        return std::make_pair(xi, Vec(v1(0.2 * std::sin(xi[0]))));
    };
    auto res = reparametrize_unstable_graph(psi, theta, euclidean_norm, euclidean_norm);
    // Only the interpolation error of the reference grid contributes; its
    // difference quotients at grid scale dominate the Lipschitz part.
    CHECK(res.epsilon <= 1e-3);
    CHECK(res.measured_sup_diff <= 2e-5);
    CHECK(res.graph.grid.radius == doctest::Approx(1.0 - res.epsilon));
    for (long long i = 0; i < res.graph.grid.node_count(); ++i) {
        double xi = res.graph.grid.node(i)[0];
        CHECK(res.graph.values[i][0] == doctest::Approx(0.2 * std::sin(xi)).epsilon(1e-6));
    }
}

TEST_CASE("translated patch becomes a shifted graph over the shrunk box") {
    auto theta = sine_graph(0.0, 1.0, 65);
    ParamFn psi = [](const Vec& xi) {
        return std::make_pair(Vec(v1(xi[0] + 0.1)), Vec(v1(0.05)));
    };
    auto res = reparametrize_unstable_graph(psi, theta, euclidean_norm, euclidean_norm);
    CHECK(res.epsilon == doctest::Approx(0.11));
    CHECK(res.graph.grid.radius == doctest::Approx(0.89));
    for (const Vec& v : res.graph.values) CHECK(v[0] == doctest::Approx(0.05));
    CHECK(res.measured_sup_diff == doctest::Approx(0.05));
    CHECK(res.measured_sup_diff <= res.sup_bound * 1.05);
    CHECK(res.graph.lip_cert <= res.lip_bound * 1.05);
}

TEST_CASE("nonlinear reparametrization matches per-node bisection") {
    auto theta = sine_graph(0.2, 1.0, 257);
    auto phi_u = [](double xi) { return xi + 0.05 * std::sin(2.0 * xi); };
    auto phi_s = [](double xi) { return 0.2 * std::sin(xi) + 0.015 * std::cos(xi); };
    ParamFn psi = [&](const Vec& xi) {
        return std::make_pair(Vec(v1(phi_u(xi[0]))), Vec(v1(phi_s(xi[0]))));
    };
    ReparamParams rp;
    rp.nodes_per_axis = {101};
    auto res = reparametrize_unstable_graph(psi, theta, euclidean_norm, euclidean_norm, rp);
    REQUIRE(res.epsilon < 0.2);

    for (long long i = 0; i < res.graph.grid.node_count(); ++i) {
        double x = res.graph.grid.node(i)[0];
        double xi = bisect(phi_u, x, x - 0.08, x + 0.08);
        CHECK(res.graph.values[i][0] == doctest::Approx(phi_s(xi)).epsilon(1e-10));
    }
    CHECK(res.graph.lip_cert <= res.lip_bound * 1.05);
    CHECK(res.measured_sup_diff <= res.sup_bound * 1.05);
}

TEST_CASE("overly large deviations are rejected before inversion") {
    auto theta = sine_graph(0.0, 1.0, 65);
    ParamFn psi = [](const Vec& xi) {
        return std::make_pair(Vec(v1(xi[0] + 0.6 * std::sin(xi[0] + 0.3))), Vec(v1(0.0)));
    };
    CHECK(thrown_code([&] {
              reparametrize_unstable_graph(psi, theta, euclidean_norm, euclidean_norm);
          }) == "EpsilonTooLarge");
}

TEST_CASE("stable-side reparametrization swaps the component roles") {
    auto sigma = sine_graph(0.1, 0.8, 65);
    sigma.direction = GraphDirection::Stable;
    // Image pairs carry (unstable component, stable component); the domain is
    // the stable side here.
    ParamFn psi = [](const Vec& eta) {
        return std::make_pair(Vec(v1(0.1 * std::sin(eta[0]) + 0.02)), eta);
    };
    auto res = reparametrize_stable_graph(psi, sigma, euclidean_norm, euclidean_norm);
    CHECK(res.epsilon == doctest::Approx(0.022));
    for (long long i = 0; i < res.graph.grid.node_count(); ++i) {
        double eta = res.graph.grid.node(i)[0];
        CHECK(res.graph.values[i][0] ==
              doctest::Approx(0.1 * std::sin(eta) + 0.02).epsilon(1e-9));
    }
    CHECK(res.measured_sup_diff <= res.sup_bound * 1.05);
}

TEST_CASE("curve fitting recenters at the midpoint parameter") {
    auto f = [](double t) { return 0.3 * t + 0.1 * t * t; };
    std::vector<std::pair<double, Vec>> samples;
    for (int i = 0; i <= 80; ++i) {
        double t = 0.2 + 0.8 * i / 80.0;
        samples.push_back({t, v1(f(t))});
    }
    auto res = fit_graph_to_curve(samples, 41, GraphDirection::Unstable, 1.0);
    CHECK(res.monotone);
    CHECK(res.center_dom[0] == doctest::Approx(0.6));
    CHECK(res.center_cod[0] == doctest::Approx(f(0.6)).epsilon(1e-4));
    CHECK(res.graph.grid.radius == doctest::Approx(0.4));
    CHECK(res.graph.eval(v1(0.0))[0] == 0.0);
    for (double s : {-0.35, -0.1, 0.15, 0.4})
        CHECK(res.graph.eval(v1(s))[0] ==
              doctest::Approx(f(0.6 + s) - res.center_cod[0]).epsilon(1e-3));

    auto folded = samples;
    folded.push_back({0.5, v1(9.0)});  // duplicate abscissa after sorting
    folded.push_back({0.5, v1(-9.0)});
    CHECK(thrown_code([&] { fit_graph_to_curve(folded, 11, GraphDirection::Unstable, 1.0); }) ==
          "CurveNotGraphical");
}

}  // TEST_SUITE
