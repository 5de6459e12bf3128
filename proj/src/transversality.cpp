#include "lipdyn/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipdyn {

Chart chart_from_graph(const LipschitzGraph& g) {
    Chart c;
    c.dim_dom = g.domain_dim();
    c.dim_cod = g.codomain_dim;
    c.radius = g.grid.radius;
    c.lip = g.lip_cert;
    c.fn = [g](const Vec& y) { return g.eval(y); };
    return c;
}

namespace {

double sup_chart_diff(const Chart& a, const Chart& b, double radius, int n, Rng& rng) {
    double sup = (a.fn(Vec::Zero(a.dim_dom)) - b.fn(Vec::Zero(a.dim_dom))).norm();
    for (int i = 0; i < n; ++i) {
        Vec y(a.dim_dom);
        for (int k = 0; k < a.dim_dom; ++k) y[k] = (2.0 * rng.uniform01() - 1.0) * radius;
        double ny = y.norm();
        if (ny > radius && ny > 0.0) y *= radius / ny;
        sup = std::max(sup, (a.fn(y) - b.fn(y)).norm());
    }
    return sup;
}

struct GridScanResult {
    Vec argmin;
    double value = 0.0;
};

GridScanResult scan_box(const std::function<double(const Vec&)>& phi, const Vec& center,
                        double half_width, int per_axis, double ball_radius) {
    const int d = static_cast<int>(center.size());
    std::vector<long> idx(static_cast<std::size_t>(d), 0);
    GridScanResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool done = false;
    while (!done) {
        Vec y(d);
        for (int k = 0; k < d; ++k) {
            double t = per_axis == 1 ? 0.0
                                     : -1.0 + 2.0 * static_cast<double>(idx[static_cast<std::size_t>(k)]) /
                                                  static_cast<double>(per_axis - 1);
            y[k] = center[k] + t * half_width;
        }
        if (y.norm() <= ball_radius) {
            double v = phi(y);
            if (v < best.value) {
                best.value = v;
                best.argmin = y;
            }
        }
        int k = 0;
        for (; k < d; ++k) {
            if (++idx[static_cast<std::size_t>(k)] < per_axis) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k == d) done = true;
    }
    if (!best.argmin.size()) best.argmin = center;
    return best;
}

}  // namespace

IntersectionResult intersect_graphs(const Chart& theta, const Chart& sigma,
                                    const IntersectParams& params) {
    if (theta.dim_cod != sigma.dim_dom || sigma.dim_cod != theta.dim_dom)
        fail("DecompositionMismatch", "chart factor dimensions do not pair up");
    const double r = std::min(theta.radius, sigma.radius);
    if (r <= 0.0) fail("ConfigInvalid", "charts have no common ball");

    const Chart& tref = params.theta_ref ? *params.theta_ref : theta;
    const Chart& sref = params.sigma_ref ? *params.sigma_ref : sigma;
    double c = params.c > 0.0 ? params.c : std::max(tref.lip, sref.lip);
    if (c >= 1.0)
        fail("HypothesisFailed", "reference Lipschitz constant " + std::to_string(c) +
                                     " is not below one");

    IntersectionResult out;
    out.c_used = c;
    Rng rng(params.seed);
    out.closeness_theta = sup_chart_diff(theta, tref, r, params.n_check, rng);
    out.closeness_sigma = sup_chart_diff(sigma, sref, r, params.n_check, rng);
    const double budget = 0.5 * (1.0 - c) * r;
    if (out.closeness_theta > budget || out.closeness_sigma > budget)
        fail("HypothesisFailed",
             "graph displacement " +
                 std::to_string(std::max(out.closeness_theta, out.closeness_sigma)) +
                 " exceeds (1-c)r/2 = " + std::to_string(budget));

    auto g = [&](const Vec& y) { return sigma.fn(theta.fn(y)); };
    auto phi = [&](const Vec& y) { return (g(y) - y).norm(); };
    const double contraction = theta.lip * sigma.lip;
    const double half = 0.5 * r;

    Vec y = Vec::Zero(theta.dim_dom);
    if (contraction < 1.0) {
        int it = 0;
        double step = std::numeric_limits<double>::infinity();
        for (; it < params.max_iter; ++it) {
            Vec next = g(y);
            step = (next - y).norm();
            y = next;
            if (step <= params.fp_tol) break;
        }
        out.iterations = it;
        if (step > params.fp_tol && phi(y) > 10.0 * params.fp_tol)
            fail("NoFixedPointInBall", "composed contraction failed to settle");
    } else {
        if (theta.dim_dom > 3)
            fail("HypothesisFailed",
                 "no contraction and the scan fallback is limited to three axes");
        out.used_grid_path = true;
        Vec center = Vec::Zero(theta.dim_dom);
        double hw = half;
        GridScanResult best;
        for (int lvl = 0; lvl < params.refine_levels; ++lvl) {
            best = scan_box(phi, center, hw, params.grid_per_axis, half);
            center = best.argmin;
            hw *= 2.5 / static_cast<double>(params.grid_per_axis - 1);
            ++out.iterations;
        }
        y = center;
        // Polish with Picard when it helps; the map need not contract globally
        // but often does near the fixed point.
        Vec yp = y;
        double rp = phi(yp);
        for (int it = 0; it < 200 && rp > params.fp_tol; ++it) {
            Vec next = g(yp);
            double rn = phi(next);
            if (rn >= rp) break;
            yp = next;
            rp = rn;
        }
        if (rp < phi(y)) y = yp;
        double h = hw * 4.0;
        double admissible = (1.0 + contraction) * h * std::sqrt(double(theta.dim_dom)) + 1e3 * params.fp_tol;
        if (phi(y) > admissible)
            fail("NoFixedPointInBall", "scan residual " + std::to_string(phi(y)) +
                                           " above admissible " + std::to_string(admissible));
    }
    if (y.norm() > half + 1e-9)
        fail("NoFixedPointInBall", "fixed point escaped the half-radius ball");
    out.y1 = y;
    out.y2 = theta.fn(y);
    out.residual = phi(y);
    return out;
}

TransversalWitness recenter_at_intersection(const Chart& theta, const Chart& sigma,
                                            const Vec& y1, double tol) {
    Vec y2 = theta.fn(y1);
    double res = (sigma.fn(y2) - y1).norm();
    if (res > tol)
        fail("NotOnBothGraphs", "point misses the graph pair by " + std::to_string(res));
    const double r = std::min(theta.radius, sigma.radius);
    double radius0 = std::min(r - y1.norm(), r - y2.norm());
    if (radius0 <= 0.0)
        fail("NoRoomToRecenter", "intersection sits on the chart boundary");

    TransversalWitness w;
    w.y1 = y1;
    w.y2 = y2;
    w.radius0 = radius0;
    w.residual = res;
    w.lip_theta = theta.lip;
    w.lip_sigma = sigma.lip;

    Chart ct;
    ct.dim_dom = theta.dim_dom;
    ct.dim_cod = theta.dim_cod;
    ct.radius = radius0;
    ct.lip = theta.lip;
    MapFn tf = theta.fn;
    Vec ty1 = y1, ty2 = y2;
    ct.fn = [tf, ty1, ty2](const Vec& y) -> Vec { return tf(ty1 + y) - ty2; };
    w.chart_theta = ct;

    Chart cs;
    cs.dim_dom = sigma.dim_dom;
    cs.dim_cod = sigma.dim_cod;
    cs.radius = radius0;
    cs.lip = sigma.lip;
    MapFn sf = sigma.fn;
    cs.fn = [sf, ty1, ty2](const Vec& x) -> Vec { return sf(ty2 + x) - ty1; };
    w.chart_sigma = cs;
    return w;
}

TransversalCheck certify_transversal(const Chart& theta, const Chart& sigma, double tol) {
    if (theta.dim_cod != sigma.dim_dom || sigma.dim_cod != theta.dim_dom)
        fail("DecompositionMismatch", "chart factor dimensions do not pair up");
    TransversalCheck out;
    out.lip_theta = theta.lip;
    out.lip_sigma = sigma.lip;
    out.origin_residual_theta = theta.fn(Vec::Zero(theta.dim_dom)).norm();
    out.origin_residual_sigma = sigma.fn(Vec::Zero(sigma.dim_dom)).norm();
    if (out.origin_residual_theta > tol || out.origin_residual_sigma > tol) {
        out.reason = "charts do not pass through the common point";
        return out;
    }
    if (theta.lip >= 1.0 || sigma.lip >= 1.0) {
        out.reason = "a chart slope reaches one; the factors are not transversal";
        return out;
    }
    out.transversal = true;
    return out;
}

}  // namespace lipdyn
