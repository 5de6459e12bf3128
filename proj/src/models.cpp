#include "lipdyn/models.hpp"

#include <cmath>

namespace lipdyn {

namespace {

double get(const ModelParams& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void check_keys(const ModelParams& p, std::initializer_list<const char*> allowed) {
    for (const auto& kv : p) {
        bool ok = false;
        for (const char* k : allowed)
            if (kv.first == k) ok = true;
        if (!ok) fail("ConfigInvalid", "unknown model parameter '" + kv.first + "'");
    }
}

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

Mat diag2(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

BuiltModel linear_saddle(const ModelParams& p) {
    check_keys(p, {"a", "b", "radius"});
    double a = get(p, "a", 2.0), b = get(p, "b", 0.5), r = get(p, "radius", 1.0);
    BuiltModel m;
    m.name = "linear_saddle";
    Mat L = diag2(a, b);
    m.model.evaluator = [L](const Vec& x) { return Vec(L * x); };
    m.model.domain_lo = v2(-4, -4);
    m.model.domain_hi = v2(4, 4);
    m.split = split_spectrum(L, 1.0);
    m.gamma_analytic = 0.0;
    m.region_radius = r;
    m.x_star = Vec::Zero(2);
    m.equilibria = {m.x_star};
    return m;
}

BuiltModel linear_coupling(const ModelParams& p) {
    check_keys(p, {"coupling", "radius"});
    double c = get(p, "coupling", 0.1), r = get(p, "radius", 1.0);
    BuiltModel m;
    m.name = "linear_coupling";
    // Linear part kept diagonal; the coupling term plays the nonlinearity, so
    // the invariant graph is the eigenline y = x c / (a - b) = x / 15.
    Mat full(2, 2);
    full << 2.0, 0.0, c, 0.5;
    m.model.evaluator = [full](const Vec& x) { return Vec(full * x); };
    m.model.domain_lo = v2(-4, -4);
    m.model.domain_hi = v2(4, 4);
    m.split = split_spectrum(diag2(2.0, 0.5), 1.0);
    m.gamma_analytic = c;  // max-norm Lipschitz constant of (0, c x)
    m.region_radius = r;
    m.x_star = Vec::Zero(2);
    m.equilibria = {m.x_star};
    return m;
}

BuiltModel sine_saddle(const ModelParams& p) {
    check_keys(p, {"gamma", "radius"});
    double g = get(p, "gamma", 0.05), r = get(p, "radius", 1.0);
    BuiltModel m;
    m.name = "sine_saddle";
    m.model.evaluator = [g](const Vec& x) {
        return v2(2.0 * x[0] + g * std::sin(x[1]), 0.5 * x[1] + g * std::sin(x[0]));
    };
    m.model.domain_lo = v2(-4, -4);
    m.model.domain_hi = v2(4, 4);
    m.split = split_spectrum(diag2(2.0, 0.5), 1.0);
    // Each component of the remainder is g-Lipschitz in the opposite variable,
    // exactly g in the max norm.
    m.gamma_analytic = g;
    m.region_radius = r;
    m.x_star = Vec::Zero(2);
    m.equilibria = {m.x_star};
    return m;
}

BuiltModel cubic1d(const ModelParams& p) {
    check_keys(p, {"radius"});
    double r = get(p, "radius", 0.3);
    BuiltModel m;
    m.name = "cubic1d";
    m.model.evaluator = [](const Vec& x) {
        return Vec(Vec::Constant(1, 1.5 * x[0] - 0.5 * x[0] * x[0] * x[0]));
    };
    m.model.domain_lo = Vec::Constant(1, -2.5);
    m.model.domain_hi = Vec::Constant(1, 2.5);
    m.split = split_spectrum(Mat::Constant(1, 1, 1.5), 1.0);
    m.region_radius = r;
    m.gamma_analytic = 1.5 * r * r;  // |d/dx (x^3/2)| on the radius-r ball
    m.x_star = Vec::Zero(1);
    m.equilibria = {Vec::Zero(1), Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    return m;
}

BuiltModel planar_gradient(const ModelParams& p) {
    check_keys(p, {"radius"});
    double r = get(p, "radius", 0.3);
    BuiltModel m;
    m.name = "planar_gradient";
    // Time-1 flow of x' = x - x^3, y' = -y, in closed form.
    const double e1 = std::exp(1.0);
    const double e2m1 = e1 * e1 - 1.0;
    m.model.evaluator = [e1, e2m1](const Vec& v) {
        double x = v[0], y = v[1];
        return Vec((Vec(2) << x * e1 / std::sqrt(1.0 + x * x * e2m1), y / e1).finished());
    };
    m.model.domain_lo = v2(-3, -3);
    m.model.domain_hi = v2(3, 3);
    m.split = split_spectrum(diag2(e1, 1.0 / e1), 1.0);
    m.region_radius = r;
    m.x_star = Vec::Zero(2);
    m.equilibria = {Vec::Zero(2), v2(1, 0), v2(-1, 0)};
    return m;
}

BuiltModel may_leonard(const ModelParams& p) {
    check_keys(p, {"alpha", "beta", "rk4_steps"});
    double alpha = get(p, "alpha", 0.3);
    double beta = get(p, "beta", 2.0);
    int steps = static_cast<int>(get(p, "rk4_steps", 50));
    BuiltModel m;
    m.name = "may_leonard";
    auto field = [alpha, beta](const Vec& x) {
        Vec f(3);
        for (int i = 0; i < 3; ++i) {
            double xi = x[i], xn = x[(i + 1) % 3], xp = x[(i + 2) % 3];
            f[i] = xi * (1.0 - xi - alpha * xn - beta * xp);
        }
        return f;
    };
    double h = 1.0 / steps;
    m.model.evaluator = [field, h, steps](const Vec& x0) {
        Vec x = x0;
        for (int s = 0; s < steps; ++s) {
            Vec k1 = field(x);
            Vec k2 = field(x + 0.5 * h * k1);
            Vec k3 = field(x + 0.5 * h * k2);
            Vec k4 = field(x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return x;
    };
    m.model.domain_lo = Vec::Constant(3, -0.5);
    m.model.domain_hi = Vec::Constant(3, 2.0);
    m.x_star = (Vec(3) << 1, 0, 0).finished();
    m.equilibria = {(Vec(3) << 1, 0, 0).finished(), (Vec(3) << 0, 1, 0).finished(),
                    (Vec(3) << 0, 0, 1).finished()};
    m.region_radius = 0.05;
    return m;
}

}  // namespace

BuiltModel make_builtin_model(const std::string& name, const ModelParams& params) {
    if (name == "linear_saddle") return linear_saddle(params);
    if (name == "linear_coupling") return linear_coupling(params);
    if (name == "sine_saddle") return sine_saddle(params);
    if (name == "cubic1d") return cubic1d(params);
    if (name == "planar_gradient") return planar_gradient(params);
    if (name == "may_leonard") return may_leonard(params);
    fail("ConfigInvalid", "unknown model '" + name + "'");
}

std::vector<std::string> builtin_model_names() {
    return {"linear_saddle", "linear_coupling", "sine_saddle",
            "cubic1d",       "planar_gradient", "may_leonard"};
}

BuiltFamily make_builtin_family(const std::string& name, const std::vector<double>& etas,
                                const ModelParams& params) {
    BuiltFamily out;
    out.name = name;
    if (name == "linear_affine") {
        // Constant shift of the linear saddle; the continued equilibrium has
        // the closed form (I - L)^{-1} (eta c).
        out.base = make_builtin_model("linear_saddle", params);
        MapFn base_map = out.base.model.evaluator;
        out.family.member = [base_map](double eta) -> MapFn {
            return [base_map, eta](const Vec& x) {
                return Vec(base_map(x) + eta * v2(-0.03, 0.12));
            };
        };
    } else if (name == "cubic1d_sin") {
        out.base = make_builtin_model("cubic1d", params);
        MapFn base_map = out.base.model.evaluator;
        out.family.member = [base_map](double eta) -> MapFn {
            return [base_map, eta](const Vec& x) {
                return Vec(base_map(x) +
                           Vec::Constant(1, eta * 0.3 * std::sin(x[0] + 0.4)));
            };
        };
    } else if (name == "saddle_sin") {
        // Bounded bump on the two-dimensional saddle; closeness is 0.6 eta in
        // the max norm (sup 0.3 eta, Lipschitz 0.6 eta).
        ModelParams q = params;
        if (!q.count("gamma")) q["gamma"] = 0.015;
        out.base = make_builtin_model("sine_saddle", q);
        MapFn base_map = out.base.model.evaluator;
        out.family.member = [base_map](double eta) -> MapFn {
            return [base_map, eta](const Vec& x) {
                return Vec(base_map(x) + eta * v2(0.3 * std::sin(x[1] + 0.4),
                                                  0.3 * std::cos(x[0])));
            };
        };
    } else {
        fail("ConfigInvalid", "unknown family '" + name + "'");
    }
    out.family.etas = etas;
    out.family.dim = out.base.model.dim();
    return out;
}

std::vector<std::string> builtin_family_names() {
    return {"linear_affine", "cubic1d_sin", "saddle_sin"};
}

}  // namespace lipdyn
