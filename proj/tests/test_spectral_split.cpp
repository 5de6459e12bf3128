#include <cmath>

#include "doctest.h"
#include "lipdyn/spectral_split.hpp"
#include "test_util.hpp"

using namespace lipdyn;
using testutil::thrown_code;

namespace {

Mat jordan_pair() {
    // Unstable Jordan block at 2 and stable Jordan block at 0.5.
    Mat m = Mat::Zero(4, 4);
    m(0, 0) = 2.0;
    m(0, 1) = 1.0;
    m(1, 1) = 2.0;
    m(2, 2) = 0.5;
    m(2, 3) = 1.0;
    m(3, 3) = 0.5;
    return m;
}

}  // namespace

TEST_SUITE("spectral_split") {

TEST_CASE("diagonal saddle splits with margins inside the gap") {
    Mat L = Mat::Zero(2, 2);
    L(0, 0) = 2.0;
    L(1, 1) = 0.5;
    auto s = split_spectrum(L, 1.0);
    CHECK(s.dim_u() == 1);
    CHECK(s.dim_s() == 1);
    CHECK(s.a > 1.0);
    CHECK(s.a < 2.0);
    CHECK(s.b > 0.5);
    CHECK(s.b < 1.0);
    // 1% margin convention.
    CHECK(s.a == doctest::Approx(2.0 - 0.01 * (2.0 - 1.0)));
    CHECK(s.b == doctest::Approx(0.5 + 0.01 * (1.0 - 0.5)));
}

TEST_CASE("projections are idempotent, complementary and commute with the map") {
    for (const Mat& m : {jordan_pair(), (Mat(2, 2) << 2.0, 0.3, 0.1, 0.4).finished()}) {
        auto s = split_spectrum(m, 1.0);
        int d = s.dim();
        CHECK((s.proj_u * s.proj_u - s.proj_u).norm() <= 1e-10);
        CHECK((s.proj_s * s.proj_s - s.proj_s).norm() <= 1e-10);
        CHECK((s.proj_u * s.proj_s).norm() <= 1e-10);
        CHECK((s.proj_u + s.proj_s - Mat::Identity(d, d)).norm() <= 1e-10);
        CHECK((s.proj_u * s.matrix - s.matrix * s.proj_u).norm() <= 1e-10);
    }
}

TEST_CASE("eigenvalue on the splitting circle is rejected") {
    Mat L = Mat::Zero(2, 2);
    L(0, 0) = 1.0;
    L(1, 1) = 0.5;
    CHECK(thrown_code([&] { split_spectrum(L, 1.0); }) == "EigenvalueOnCircle");
}

TEST_CASE("diagonal stable block at depth zero keeps the euclidean norm") {
    Mat L = Mat::Zero(2, 2);
    L(0, 0) = 2.0;
    L(1, 1) = 0.5;
    auto s = split_spectrum(L, 1.0);
    auto n = build_adapted_norm(s, 1.5, 0.6);
    CHECK(n.depth_s == 0);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        Vec cs = rng.uniform_vec(1, -3.0, 3.0);
        CHECK(n.norm_s(cs) == doctest::Approx(cs.norm()).epsilon(1e-12));
    }
}

TEST_CASE("jordan blocks contract and expand at the requested rates") {
    auto s = split_spectrum(jordan_pair(), 1.0);
    auto n = build_adapted_norm(s, 1.5, 0.8);
    Mat Ms = s.block_s();
    Mat Mu = s.block_u();
    Mat Mu_inv = Mu.inverse();
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        Vec cs = rng.uniform_vec(n.dim_s(), -2.0, 2.0);
        Vec cu = rng.uniform_vec(n.dim_u(), -2.0, 2.0);
        CHECK(n.norm_s(Vec(Ms * cs)) <= 0.8 * n.norm_s(cs) + 1e-12);
        CHECK(n.norm_u(Vec(Mu_inv * cu)) <= n.norm_u(cu) / 1.5 + 1e-12);
    }
}

TEST_CASE("adapted norm value matches the max-over-iterates formula") {
    auto s = split_spectrum(jordan_pair(), 1.0);
    auto n = build_adapted_norm(s, 1.5, 0.8);
    Mat Ms = s.block_s();
    Mat Mu_inv = s.block_u().inverse();
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        Vec x = rng.uniform_vec(4, -2.0, 2.0);
        Vec cs = n.coords_s(x);
        Vec cu = n.coords_u(x);
        double want_s = 0.0;
        Mat p = Mat::Identity(cs.size(), cs.size());
        for (int k = 0; k <= n.depth_s; ++k) {
            want_s = std::max(want_s, std::pow(0.8, -k) * (p * cs).norm());
            p = Ms * p;
        }
        double want_u = 0.0;
        Mat q = Mat::Identity(cu.size(), cu.size());
        for (int k = 0; k <= n.depth_u; ++k) {
            want_u = std::max(want_u, std::pow(1.5, k) * (q * cu).norm());
            q = Mu_inv * q;
        }
        CHECK(n.norm_s(cs) == doctest::Approx(want_s).epsilon(1e-10));
        CHECK(n.norm_u(cu) == doctest::Approx(want_u).epsilon(1e-10));
        CHECK(eval_adapted_norm(n, x) == doctest::Approx(std::max(want_s, want_u)).epsilon(1e-10));
    }
}

TEST_CASE("adapted norm is a norm") {
    auto s = split_spectrum(jordan_pair(), 1.0);
    auto n = build_adapted_norm(s, 1.5, 0.8);
    CHECK(eval_adapted_norm(n, Vec::Zero(4)) == 0.0);
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        Vec x = rng.uniform_vec(4, -2.0, 2.0);
        Vec y = rng.uniform_vec(4, -2.0, 2.0);
        double t = rng.uniform(-3.0, 3.0);
        CHECK(n(Vec(t * x)) == doctest::Approx(std::abs(t) * n(x)).epsilon(1e-12));
        CHECK(n(Vec(x + y)) <= n(x) + n(y) + 1e-12);
        if (n(x) == 0.0) CHECK(x.norm() == 0.0);
    }
}

TEST_CASE("rates outside the spectral gap are rejected") {
    auto s = split_spectrum(jordan_pair(), 1.0);
    CHECK(thrown_code([&] { build_adapted_norm(s, 1.5, 0.4); }) == "RateOutsideSpectralGap");
    CHECK(thrown_code([&] { build_adapted_norm(s, 2.5, 0.8); }) == "RateOutsideSpectralGap");
}

TEST_CASE("resolvent bound arithmetic") {
    CHECK(resolvent_bound(2.0, 0.5) == doctest::Approx(4.0));
    CHECK(resolvent_bound(1.5, 0.8) == doctest::Approx(8.0));
    CHECK(resolvent_bound(1e6, 1e-6) == doctest::Approx(2.0).epsilon(1e-5));
    // Degenerate sides drop their term.
    CHECK(resolvent_bound(2.0, 0.5, 0, 1) == doctest::Approx(2.0));
    CHECK(resolvent_bound(2.0, 0.5, 1, 0) == doctest::Approx(2.0));
    CHECK(thrown_code([&] { resolvent_bound(2.0, 1.1); }) == "GapViolated");
    CHECK(thrown_code([&] { resolvent_bound(0.9, 0.5); }) == "GapViolated");
}

}  // TEST_SUITE
