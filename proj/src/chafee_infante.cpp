#include "lipdyn/chafee_infante.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lipdyn {

namespace {

// Quintic smoothstep: 0 at 0, 1 at 1, two vanishing derivatives at each end.
double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
double smoothstep_d(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

struct PointwiseData {
    Vec w;    // u at the collocation points
    Vec wx;   // u_x there
    double h1 = 0.0;
    double g = 1.0;
    double gd = 0.0;  // dg/dh1
};

PointwiseData pointwise(const GalerkinModel& m, const Vec& c) {
    PointwiseData d;
    d.w = m.val_at * c;
    d.wx = m.der_at * c;
    d.h1 = std::sqrt(c.cwiseProduct(c).dot(m.k2));
    if (m.r_cut > 0.0) {
        double t = d.h1 - m.r_cut;
        d.g = 1.0 - smoothstep(t);
        d.gd = -smoothstep_d(t);
    }
    return d;
}

// Reaction + forcing values at the collocation points.
Vec rhs_values(const GalerkinModel& m, const PointwiseData& d) {
    Vec f = m.lambda * d.g * (d.w.array() - d.w.array().cube()).matrix();
    if (m.eta != 0.0) f += m.eta * d.wx.array().sin().matrix();
    return f;
}

Vec project(const GalerkinModel& m, const Vec& values) {
    return m.quad_w * (m.val_at.transpose() * values);
}

// Derivative of the projected nonlinearity with respect to the coefficients.
Mat rhs_jacobian(const GalerkinModel& m, const Vec& c, const PointwiseData& d) {
    Mat J = m.quad_w * m.lambda * d.g *
            (m.val_at.transpose() *
             (1.0 - 3.0 * d.w.array().square()).matrix().asDiagonal() * m.val_at);
    if (m.eta != 0.0)
        J += m.quad_w * m.eta *
             (m.val_at.transpose() * d.wx.array().cos().matrix().asDiagonal() * m.der_at);
    if (d.gd != 0.0 && d.h1 > 0.0) {
        Vec proj_cubic = project(m, m.lambda * (d.w.array() - d.w.array().cube()).matrix());
        Vec grad_h1 = c.cwiseProduct(m.k2) / d.h1;
        J += (d.gd * proj_cubic) * grad_h1.transpose();
    }
    return J;
}

}  // namespace

double h1_norm(const GalerkinModel& model, const Vec& c) {
    return std::sqrt(c.cwiseProduct(c).dot(model.k2));
}

double cutoff_factor(const GalerkinModel& model, double h1) {
    if (model.r_cut <= 0.0) return 1.0;
    return 1.0 - smoothstep(h1 - model.r_cut);
}

Vec etd_step(const GalerkinModel& model, const Vec& c) {
    PointwiseData d = pointwise(model, c);
    Vec nl = project(model, rhs_values(model, d));
    return model.decay.cwiseProduct(c) + model.etd_weight.cwiseProduct(nl);
}

Vec time_one_map(const GalerkinModel& model, const Vec& c) {
    Vec x = c;
    for (int s = 0; s < model.steps_per_unit; ++s) x = etd_step(model, x);
    return x;
}

MapModel build_time_one_map(const GalerkinModel& model) {
    if (model.steps_per_unit * model.dt != 1.0 &&
        std::abs(model.steps_per_unit * model.dt - 1.0) > 1e-12)
        fail("ConfigInvalid", "steps_per_unit * dt must equal one time unit");
    if (model.dealias_points < 2 * model.modes)
        fail("ConfigInvalid", "collocation grid must have at least 2m points");
    MapModel mm;
    GalerkinModel copy = model;
    mm.evaluator = [copy](const Vec& c) { return time_one_map(copy, c); };
    mm.domain_lo = Vec::Constant(model.modes, -10.0);
    mm.domain_hi = Vec::Constant(model.modes, 10.0);
    mm.fixed_point_hint = Vec::Zero(model.modes);
    return mm;
}

Mat time_one_jacobian(const GalerkinModel& model, const Vec& c) {
    Mat J = Mat::Identity(model.modes, model.modes);
    Vec x = c;
    for (int s = 0; s < model.steps_per_unit; ++s) {
        PointwiseData d = pointwise(model, x);
        Mat step = model.decay.asDiagonal();
        step += model.etd_weight.asDiagonal() * rhs_jacobian(model, x, d);
        J = step * J;
        x = model.decay.cwiseProduct(x) +
            model.etd_weight.cwiseProduct(project(model, rhs_values(model, d)));
    }
    return J;
}

Vec to_h1_coords(const GalerkinModel& model, const Vec& c) {
    return model.k2.cwiseSqrt().cwiseProduct(c);
}

Vec from_h1_coords(const GalerkinModel& model, const Vec& ch) {
    return ch.cwiseQuotient(model.k2.cwiseSqrt());
}

MapFn time_one_map_h1(const GalerkinModel& model) {
    return [model](const Vec& ch) {
        return to_h1_coords(model, time_one_map(model, from_h1_coords(model, ch)));
    };
}

Mat time_one_jacobian_h1(const GalerkinModel& model, const Vec& c) {
    Vec d = model.k2.cwiseSqrt();
    return d.asDiagonal() * time_one_jacobian(model, c) * d.cwiseInverse().asDiagonal();
}

Vec reaction_term(const GalerkinModel& model, const Vec& c) {
    PointwiseData d = pointwise(model, c);
    return project(model,
                   (model.lambda * d.g * (d.w.array() - d.w.array().cube())).matrix());
}

Vec forcing_term(const GalerkinModel& model, const Vec& c) {
    PointwiseData d = pointwise(model, c);
    return project(model, (model.eta * d.wx.array().sin()).matrix());
}

Vec stationary_residual(const GalerkinModel& model, const Vec& c) {
    PointwiseData d = pointwise(model, c);
    return model.k2.cwiseProduct(c) - project(model, rhs_values(model, d));
}

Mat stationary_jacobian(const GalerkinModel& model, const Vec& c) {
    PointwiseData d = pointwise(model, c);
    Mat J = model.k2.asDiagonal();
    return J - rhs_jacobian(model, c, d);
}

double energy(const GalerkinModel& model, const Vec& c) {
    double grad = c.cwiseProduct(c).dot(model.k2);
    double mass = c.squaredNorm();
    // Quartic term with a periodic trapezoid on the odd extension; exact for
    // the trigonometric degree at hand.
    int N = 8 * model.modes + 8;
    double quart = 0.0;
    for (int i = 0; i < N; ++i) {
        double x = 2.0 * M_PI * i / N;
        double u = 0.0;
        for (int k = 1; k <= model.modes; ++k)
            u += c[k - 1] * std::sqrt(2.0 / M_PI) * std::sin(k * x);
        quart += u * u * u * u;
    }
    quart *= M_PI / N;
    return 0.5 * grad - model.lambda * (0.5 * mass - 0.25 * quart);
}

std::vector<std::pair<double, double>> profile(const GalerkinModel& model, const Vec& c, int n) {
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        double x = M_PI * i / (n + 1);
        double u = 0.0;
        for (int k = 1; k <= model.modes; ++k)
            u += c[k - 1] * std::sqrt(2.0 / M_PI) * std::sin(k * x);
        out.emplace_back(x, u);
    }
    return out;
}

GalerkinModel make_galerkin_model(int modes, double lambda, double eta,
                                  const GalerkinOptions& opts) {
    if (modes < 1) fail("ConfigInvalid", "need at least one mode");
    if (lambda <= 0.0) fail("ConfigInvalid", "lambda must be positive");
    if (eta < 0.0 || eta > 1.0) fail("ConfigInvalid", "eta must lie in [0, 1]");
    GalerkinModel m;
    m.modes = modes;
    m.lambda = lambda;
    m.eta = eta;
    m.dt = opts.dt;
    m.steps_per_unit = opts.steps_per_unit;
    if (std::abs(m.steps_per_unit * m.dt - 1.0) > 1e-12)
        fail("ConfigInvalid", "steps_per_unit * dt must equal one time unit");
    m.dealias_points = opts.dealias_points > 0 ? opts.dealias_points : 4 * modes;
    if (m.dealias_points < 2 * modes)
        fail("ConfigInvalid", "collocation grid must have at least 2m points");

    const int M = m.dealias_points;
    m.val_at = Mat(M - 1, modes);
    m.der_at = Mat(M - 1, modes);
    const double scale = std::sqrt(2.0 / M_PI);
    for (int j = 1; j < M; ++j) {
        double x = M_PI * j / M;
        for (int k = 1; k <= modes; ++k) {
            m.val_at(j - 1, k - 1) = scale * std::sin(k * x);
            m.der_at(j - 1, k - 1) = scale * k * std::cos(k * x);
        }
    }
    m.quad_w = M_PI / M;
    m.k2 = Vec(modes);
    m.decay = Vec(modes);
    m.etd_weight = Vec(modes);
    for (int k = 1; k <= modes; ++k) {
        double kk = double(k) * k;
        m.k2[k - 1] = kk;
        m.decay[k - 1] = std::exp(-kk * m.dt);
        m.etd_weight[k - 1] = (1.0 - m.decay[k - 1]) / kk;
    }

    if (opts.r_cut > 0.0) {
        m.r_cut = opts.r_cut;
    } else {
        // Probe the uncut system and place the cutoff at twice the radius the
        // orbits settle into, so it never acts on the limit dynamics.
        GalerkinModel probe = m;
        probe.r_cut = 0.0;
        double radius = 0.0;
        for (int k = 1; k <= std::min(modes, 3); ++k)
            for (double sign : {1.0, -1.0}) {
                Vec c = Vec::Zero(modes);
                c[k - 1] = 1.5 * sign;
                for (int t = 0; t < opts.probe_units; ++t) {
                    c = time_one_map(probe, c);
                    if (t >= opts.probe_units - opts.probe_tail)
                        radius = std::max(radius, h1_norm(probe, c));
                }
            }
        m.r_cut = std::max(1.0, 2.0 * radius);
    }
    return m;
}

std::vector<GalerkinEquilibrium> find_equilibria(const GalerkinModel& model,
                                                 const EquilibriaParams& params) {
    for (int k = 1; k * k <= model.lambda + 1.0; ++k)
        if (std::abs(model.lambda - double(k) * k) <= params.resonance_tol)
            fail("ResonantLambda", "lambda sits on the square " + std::to_string(k * k));

    GalerkinModel base = model;
    base.eta = 0.0;

    int n = 0;
    while (double(n + 1) * (n + 1) < base.lambda) ++n;
    const int n_seeded = std::min(n, base.modes);

    auto newton = [&](Vec c) -> std::optional<Vec> {
        for (int it = 0; it < params.max_newton; ++it) {
            Vec r = stationary_residual(base, c);
            if (r.lpNorm<Eigen::Infinity>() <= params.newton_tol) return c;
            Mat J = stationary_jacobian(base, c);
            Eigen::FullPivLU<Mat> lu(J);
            if (!lu.isInvertible()) return std::nullopt;
            c -= lu.solve(r);
            if (!all_finite(c)) return std::nullopt;
        }
        return std::nullopt;
    };

    std::vector<Vec> roots;
    auto push_root = [&](const Vec& c) {
        for (const auto& r : roots)
            if ((r - c).lpNorm<Eigen::Infinity>() < params.dedupe_tol) return;
        roots.push_back(c);
    };
    push_root(Vec::Zero(base.modes));  // zero solves exactly
    for (int k = 1; k <= n_seeded; ++k) {
        double amp = std::sqrt((2.0 * M_PI / 3.0) * (1.0 - double(k) * k / base.lambda));
        for (double sign : {1.0, -1.0}) {
            Vec seed = Vec::Zero(base.modes);
            seed[k - 1] = sign * amp;
            auto root = newton(seed);
            if (root) push_root(*root);
        }
    }
    if (static_cast<int>(roots.size()) < 2 * n_seeded + 1)
        fail("SeedExhausted", "only " + std::to_string(roots.size()) +
                                  " distinct roots from " + std::to_string(2 * n_seeded + 1) +
                                  " seeds");

    if (model.eta != 0.0) {
        // Continue each root to the forced system, then polish with Newton on
        // the forced stationary equations.
        MapFn map0 = time_one_map_h1(base);
        GalerkinModel forced = model;
        MapFn map1 = time_one_map_h1(forced);
        std::vector<Vec> continued;
        for (const auto& root : roots) {
            Vec rh = to_h1_coords(base, root);
            Mat J = time_one_jacobian_h1(base, root);
            SplitLinearMap split = split_spectrum(J, 1.0);
            HyperbolicCertificate cert =
                certify_hyperbolic(map0, rh, split, params.cert_delta, params.certify);
            SplitSystem sys = build_split_system(map0, rh, split, cert.gamma,
                                                 cert.gamma_analytic, cert.delta);
            ContinuationResult res =
                continue_equilibrium(sys, cert, map1, rh, params.continuation);
            Vec c = from_h1_coords(forced, res.x_star);
            for (int it = 0; it < params.max_newton; ++it) {
                Vec r = stationary_residual(forced, c);
                if (r.lpNorm<Eigen::Infinity>() <= params.newton_tol) break;
                Eigen::FullPivLU<Mat> lu(stationary_jacobian(forced, c));
                if (!lu.isInvertible()) break;
                c -= lu.solve(r);
            }
            continued.push_back(c);
        }
        roots = std::move(continued);
    }

    std::vector<GalerkinEquilibrium> out;
    for (const auto& root : roots) {
        GalerkinEquilibrium eq;
        eq.coeffs = root;
        eq.h1 = h1_norm(model, root);
        Mat J = time_one_jacobian(model, root);
        Eigen::EigenSolver<Mat> es(J);
        if (es.info() != Eigen::Success)
            fail("NonConvergedEigensolve", "equilibrium linearization eigensolve failed");
        for (int i = 0; i < J.rows(); ++i) {
            double mod = std::abs(es.eigenvalues()[i]);
            if (mod > 1.0 + 1e-9) ++eq.unstable_count;
            if (std::abs(mod - 1.0) <= 1e-9) eq.hyperbolic = false;
        }
        eq.stable = eq.unstable_count == 0;
        out.push_back(std::move(eq));
    }
    std::sort(out.begin(), out.end(), [](const GalerkinEquilibrium& a,
                                         const GalerkinEquilibrium& b) {
        if (a.unstable_count != b.unstable_count) return a.unstable_count > b.unstable_count;
        return a.coeffs[0] < b.coeffs[0];
    });
    return out;
}

std::vector<CountRow> verify_equilibrium_count(const std::vector<double>& lambdas, int modes,
                                               const EquilibriaParams& params,
                                               const GalerkinOptions& opts) {
    std::vector<CountRow> rows;
    bool all_ok = true;
    for (double lambda : lambdas) {
        GalerkinModel model = make_galerkin_model(modes, lambda, 0.0, opts);
        CountRow row;
        row.lambda = lambda;
        int n = 0;
        while (double(n + 1) * (n + 1) < lambda) ++n;
        row.expected = 2 * n + 1;
        try {
            row.found = static_cast<int>(find_equilibria(model, params).size());
        } catch (const Error& e) {
            if (std::string(e.code()) == "SeedExhausted")
                row.found = -1;
            else
                throw;
        }
        row.ok = row.found == row.expected;
        if (!row.ok) all_ok = false;
        rows.push_back(row);
    }
    if (!all_ok) {
        std::string msg = "equilibrium counts off:";
        for (const auto& r : rows)
            if (!r.ok)
                msg += " lambda=" + std::to_string(r.lambda) + " expected " +
                       std::to_string(r.expected) + " found " + std::to_string(r.found);
        fail("CountMismatch", msg);
    }
    return rows;
}

NemytskiiResult nemytskii_remainder_diagnostic(const NemytskiiSpec& spec,
                                               const std::vector<double>& radii) {
    if (spec.p < 1.0) fail("ConfigInvalid", "exponent p must be at least one");
    const double x0 = M_PI / 2.0;
    auto f = [&](double t) { return spec.affine ? spec.a * t + spec.b : std::sin(t); };
    auto fd = [&](double t) { return spec.affine ? spec.a : std::cos(t); };

    NemytskiiResult out;
    for (double r : radii) {
        if (r <= 0.0 || x0 - r < 0.0 || x0 + r > M_PI)
            fail("ConfigInvalid", "bump of radius " + std::to_string(r) +
                                      " leaves the interval");
        // Midpoint quadrature over the whole interval; both norms see the same
        // points inside the bump, so its measure cancels exactly in the ratio.
        int nq = std::max(spec.quad_points, static_cast<int>(std::ceil(8.0 * M_PI / (2.0 * r))));
        double num = 0.0, den = 0.0;
        const double h = M_PI / nq;
        for (int i = 0; i < nq; ++i) {
            double x = (i + 0.5) * h;
            double ur = std::abs(x - x0) < r ? spec.s0 : 0.0;
            double rem = f(spec.u0 + ur) - f(spec.u0) - fd(spec.u0) * ur;
            num += std::pow(std::abs(rem), spec.p) * h;
            den += std::pow(std::abs(ur), spec.p) * h;
        }
        double ratio = den > 0.0 ? std::pow(num / den, 1.0 / spec.p) : 0.0;
        out.rows.emplace_back(r, ratio);
    }
    if (!out.rows.empty()) out.limit = out.rows.back().second;
    return out;
}

}  // namespace lipdyn
