#include "lipdyn/hyperbolicity.hpp"

#include <cmath>
#include <limits>

namespace lipdyn {

namespace {

// Sample a point of the radius-r ball of `norm` by scaling a random direction.
Vec sample_ball(Rng& rng, int dim, double radius, const NormFn& norm) {
    Vec v = rng.direction(dim);
    double nv = norm(v);
    double t = std::pow(rng.uniform01(), 1.0 / std::max(1, dim));
    return (t * radius / nv) * v;
}

}  // namespace

LipEstimate estimate_lipschitz_constant(const MapFn& map, int dim, double radius,
                                        const NormFn& norm, int n_pairs, std::uint64_t seed,
                                        double inflation, std::optional<double> analytic) {
    if (analytic) return LipEstimate{*analytic, true, 0};
    if (dim == 0) return LipEstimate{0.0, false, 0};
    Rng rng(seed);
    double lip = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
        Vec x = sample_ball(rng, dim, radius, norm);
        Vec y = sample_ball(rng, dim, radius, norm);
        double denom = norm(x - y);
        if (denom < 1e-12) continue;
        lip = std::max(lip, norm(map(x) - map(y)) / denom);
    }
    return LipEstimate{lip * inflation, false, n_pairs};
}

double flattened_lip_bound(double a, double b, double gamma) {
    double denom = a - b - 3.0 * gamma;
    if (denom <= 0) return std::numeric_limits<double>::infinity();
    return 2.0 * a * gamma / denom;
}

double straightened_graph_lip(double a, double b, double gamma) {
    double f = flattened_lip_bound(a, b, gamma);
    double denom = a - b - 3.0 * f;
    if (!(std::isfinite(f)) || denom <= 0) return std::numeric_limits<double>::infinity();
    return f / denom;
}

double straightened_lip_bound(double a, double b, double gamma) {
    double f = flattened_lip_bound(a, b, gamma);
    double fs = straightened_graph_lip(a, b, gamma);
    if (!std::isfinite(f) || !std::isfinite(fs))
        return std::numeric_limits<double>::infinity();
    return f * (1.0 + fs) * (3.0 + fs) + fs * (b + 1.0 / a);
}

namespace {

bool straightening_feasible(double a, double b, double resolvent, double gamma) {
    double d1 = a - b - 3.0 * gamma;
    if (d1 <= 0) return false;
    double f = flattened_lip_bound(a, b, gamma);
    if (!(resolvent * f < 1.0)) return false;
    if (!(b + 2.0 * f < 1.0 && 1.0 < a - 2.0 * f)) return false;
    double fs = straightened_graph_lip(a, b, gamma);
    if (!std::isfinite(fs)) return false;
    if (!(2.0 * fs * (a - b - 2.0 * gamma) / d1 < 1.0)) return false;
    double f1 = straightened_lip_bound(a, b, gamma);
    if (!(resolvent * f1 < 1.0)) return false;
    if (!(b + 2.0 * f1 < 1.0 && 1.0 < a - 2.0 * f1)) return false;
    return true;
}

}  // namespace

double strong_gamma_threshold(double a, double b, double resolvent, int dim_u, int dim_s) {
    // One-sided spectra need only the corresponding persistence inequality.
    if (dim_u == 0) return std::min((1.0 - b) / 2.0, 1.0 / resolvent);
    if (dim_s == 0) return std::min((a - 1.0) / 2.0, 1.0 / resolvent);

    double lo = 0.0, hi = (a - b) / 3.0;
    if (!straightening_feasible(a, b, resolvent, 1e-9)) return 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-6; ++it) {
        double mid = 0.5 * (lo + hi);
        if (straightening_feasible(a, b, resolvent, mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

HyperbolicCertificate certify_hyperbolic(const MapFn& map, const Vec& x_star,
                                         const SplitLinearMap& split, double delta,
                                         const CertifyOptions& opts) {
    HyperbolicCertificate cert;
    cert.x_star = x_star;
    cert.rho = split.rho;
    cert.a = split.a;
    cert.b = split.b;
    cert.dim_u = split.dim_u();
    cert.dim_s = split.dim_s();
    cert.delta = delta;

    if (cert.dim_u > 0 && !(cert.a > 1.0))
        fail("GapViolated", "unstable bound a = " + std::to_string(cert.a) + " is not > 1");
    if (cert.dim_s > 0 && !(cert.b < 1.0))
        fail("GapViolated", "stable bound b = " + std::to_string(cert.b) + " is not < 1");

    SplitSystem sys = build_split_system(map, x_star, split, 0.0, false, delta,
                                         opts.equilibrium_tol);
    LipEstimate lip = estimate_lipschitz_constant(
        sys.nonlinear, sys.dim(), delta, sys.norm.full_fn(), opts.n_pairs, opts.seed, 1.1,
        std::nullopt);
    cert.gamma = lip.value;
    cert.gamma_analytic = false;
    cert.resolvent = resolvent_bound(cert.a, cert.b, cert.dim_u, cert.dim_s);

    const double g = cert.gamma;
    cert.weak_flag = true;
    if (cert.dim_s > 0 && !(cert.b + 2.0 * g < 1.0)) {
        cert.weak_flag = false;
        cert.failed_condition = "b + 2 gamma < 1";
    } else if (cert.dim_u > 0 && !(1.0 < cert.a - 2.0 * g)) {
        cert.weak_flag = false;
        cert.failed_condition = "a - 2 gamma > 1";
    } else if (!(g * cert.resolvent <= 1.0)) {
        cert.weak_flag = false;
        cert.failed_condition = "gamma * resolvent <= 1";
    }

    cert.gamma1_threshold = strong_gamma_threshold(cert.a, cert.b, cert.resolvent,
                                                   cert.dim_u, cert.dim_s);
    cert.strong_flag = cert.weak_flag && g < cert.gamma1_threshold;
    if (cert.weak_flag && !cert.strong_flag)
        cert.failed_condition = "gamma < gamma1 threshold";

    double up_margin = cert.dim_s > 0 ? 1.0 - (cert.b + 2.0 * g) : (cert.a - 2.0 * g) - 1.0;
    double lo_margin = cert.dim_u > 0 ? (cert.a - 2.0 * g) - 1.0 : 1.0 - (cert.b + 2.0 * g);
    cert.epsilon0 = std::max(0.0, std::min(up_margin, lo_margin) / 2.0);

    if (cert.strong_flag) {
        if (cert.dim_u == 0 || cert.dim_s == 0) {
            cert.isolation_radius = delta;  // straightening is the identity
        } else {
            double g1 = cert.gamma1_threshold;
            double f = flattened_lip_bound(cert.a, cert.b, g1);
            double lip_theta = f / (cert.a - cert.b - 3.0 * f);
            double lip_sigma = g1 / (cert.a - cert.b - 3.0 * g1);
            cert.isolation_radius = delta / ((1.0 + lip_theta) * (1.0 + lip_sigma));
        }
    }

    if (opts.require == CertLevel::Weak && !cert.weak_flag)
        fail("SmallnessViolated", "weak hyperbolicity required: failed " +
                                      cert.failed_condition + " (gamma = " +
                                      std::to_string(g) + ")");
    if (opts.require == CertLevel::Strong && !cert.strong_flag)
        fail("SmallnessViolated",
             "strong hyperbolicity required: failed " + cert.failed_condition +
                 " (gamma = " + std::to_string(g) +
                 ", gamma1 = " + std::to_string(cert.gamma1_threshold) + ")");
    return cert;
}

StraightenResult straighten_coordinates(const SplitSystem& sys,
                                        const HyperbolicCertificate& cert,
                                        const LipschitzGraph& unstable_graph,
                                        const LipschitzGraph& stable_graph,
                                        const GraphTransformParams& params) {
    const auto& sp = sys.split;
    const double g = cert.gamma;
    double d1 = sp.a - sp.b - 3.0 * g;
    double fs = straightened_graph_lip(sp.a, sp.b, g);
    if (!(d1 > 0) || !std::isfinite(fs) ||
        !(2.0 * fs * (sp.a - sp.b - 2.0 * g) / d1 < 1.0))
        fail("StraighteningContractionFailed",
             "bi-Lipschitz condition fails at gamma = " + std::to_string(g));

    const AdaptedNorm& nm = sys.norm;
    Mat basis_u = nm.basis_u, basis_s = nm.basis_s;

    // h shears along X_u by the stable graph, flattening W^s. Shears along a
    // complementary subspace invert in closed form.
    LipschitzGraph sigma = stable_graph;
    MapFn h = [nm, basis_u, sigma](const Vec& x) -> Vec {
        return x + basis_u * sigma.eval(nm.coords_s(x));
    };
    MapFn h_inv = [nm, basis_u, sigma](const Vec& y) -> Vec {
        return y - basis_u * sigma.eval(nm.coords_s(y));
    };

    // Unstable graph of the flattened map, then the second shear along X_s.
    Mat L = sp.matrix;
    MapFn map_flat_nonlinear = [sys, h, h_inv, L](const Vec& x) -> Vec {
        return h_inv(sys.map(h(x))) - L * x;
    };
    double f = flattened_lip_bound(sp.a, sp.b, g);
    SplitSystem flat_sys = build_split_system_at_origin(map_flat_nonlinear, sp, f, true,
                                                        sys.region_radius);
    GraphTransformParams flat_params = params;
    if (flat_params.nodes_per_axis.empty() && unstable_graph.domain_dim() > 0)
        flat_params.nodes_per_axis = unstable_graph.grid.nodes_per_axis;
    flat_params.radius = unstable_graph.grid.radius > 0 ? unstable_graph.grid.radius
                                                        : params.radius;
    ManifoldResult flat_manifold =
        compute_invariant_graph(flat_sys, GraphDirection::Unstable, flat_params);
    LipschitzGraph theta_tilde = flat_manifold.graph;

    MapFn k = [nm, basis_s, theta_tilde](const Vec& x) -> Vec {
        return x + basis_s * theta_tilde.eval(nm.coords_u(x));
    };
    MapFn k_inv = [nm, basis_s, theta_tilde](const Vec& y) -> Vec {
        return y - basis_s * theta_tilde.eval(nm.coords_u(y));
    };

    StraightenResult out;
    out.g = [h, k](const Vec& x) { return h(k(x)); };
    out.g_inv = [h_inv, k_inv](const Vec& y) { return k_inv(h_inv(y)); };
    out.theta_tilde = theta_tilde;
    out.f_gamma = f;
    out.f1_gamma = straightened_lip_bound(sp.a, sp.b, g);

    MapFn g_fwd = out.g, g_bwd = out.g_inv;
    auto sys_map = [sys](const Vec& x) { return sys.map(x); };
    MapFn straight_nonlinear = [sys_map, g_fwd, g_bwd, L](const Vec& x) -> Vec {
        return g_bwd(sys_map(g_fwd(x))) - L * x;
    };
    out.straightened = build_split_system_at_origin(straight_nonlinear, sp, out.f1_gamma, true,
                                                    sys.region_radius);

    // Both manifolds of the conjugated map must now be flat.
    ManifoldResult chk_u =
        compute_invariant_graph(out.straightened, GraphDirection::Unstable, flat_params);
    GraphTransformParams stable_params = flat_params;
    stable_params.nodes_per_axis.clear();
    if (stable_graph.domain_dim() > 0) {
        stable_params.nodes_per_axis = stable_graph.grid.nodes_per_axis;
        stable_params.radius = stable_graph.grid.radius;
    }
    ManifoldResult chk_s =
        compute_invariant_graph(out.straightened, GraphDirection::Stable, stable_params);
    NormFn zero_norm_s = sys.norm.norm_s_fn();
    NormFn zero_norm_u = sys.norm.norm_u_fn();
    for (const Vec& v : chk_u.graph.values)
        out.unstable_flat_sup = std::max(out.unstable_flat_sup, zero_norm_s(v));
    for (const Vec& v : chk_s.graph.values)
        out.stable_flat_sup = std::max(out.stable_flat_sup, zero_norm_u(v));
    return out;
}

DichotomyReport orbit_dichotomy_check(const SplitSystem& sys, const HyperbolicCertificate& cert,
                                      int n_samples, int horizon, std::uint64_t seed,
                                      double conv_tol) {
    DichotomyReport rep;
    rep.n_samples = n_samples;
    const double r = cert.isolation_radius > 0 ? cert.isolation_radius : cert.delta;
    Rng rng(seed);
    for (int s = 0; s < n_samples; ++s) {
        Vec x = sample_ball(rng, sys.dim(), r, sys.norm.full_fn());
        bool exited = false, converged = false;
        for (int k = 0; k < horizon; ++k) {
            x = sys.map(x);
            double n = sys.norm(x);
            if (n > r) {
                exited = true;
                break;
            }
            if (n <= conv_tol) {
                converged = true;
                break;
            }
        }
        if (exited) ++rep.n_exited;
        else if (converged) ++rep.n_converged;
        else ++rep.n_undetermined;
    }
    rep.ok = rep.n_undetermined == 0;
    return rep;
}

std::vector<Vec> pseudo_orbit_refine(const SplitSystem& sys, std::vector<Vec> sequence,
                                     int iterations) {
    const auto n = sequence.size();
    if (n == 0) return sequence;
    Mat Mu = sys.block_u(), Ms = sys.block_s();
    Eigen::PartialPivLU<Mat> Mu_lu;
    bool has_u = sys.dim_u() > 0, has_s = sys.dim_s() > 0;
    if (has_u) Mu_lu.compute(Mu);
    Vec zero = Vec::Zero(sys.dim());

    for (int it = 0; it < iterations; ++it) {
        std::vector<Vec> next(n);
        for (size_t m = 0; m < n; ++m) {
            const Vec& right = m + 1 < n ? sequence[m + 1] : zero;
            const Vec& left = m > 0 ? sequence[m - 1] : zero;
            Vec cu = Vec::Zero(sys.dim_u()), cs = Vec::Zero(sys.dim_s());
            if (has_u)
                cu = Mu_lu.solve(sys.norm.coords_u(right) - sys.n_u(sequence[m]));
            if (has_s)
                cs = Ms * sys.norm.coords_s(left) + sys.n_s(left);
            next[m] = sys.norm.from_coords(cu, cs);
        }
        sequence = std::move(next);
    }
    return sequence;
}

}  // namespace lipdyn
