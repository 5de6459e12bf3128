#include "lipdyn/split_system.hpp"

namespace lipdyn {

SplitSystem build_split_system(const MapFn& map, const Vec& x_star, const SplitLinearMap& split,
                               double gamma, bool gamma_analytic, double region_radius,
                               double equilibrium_tol) {
    Vec residual = map(x_star) - x_star;
    if (residual.norm() > equilibrium_tol)
        fail("NotAnEquilibrium",
             "||T(x*) - x*|| = " + std::to_string(residual.norm()) + " exceeds tol");

    SplitSystem sys;
    sys.split = split;
    sys.norm = build_adapted_norm(split);
    Mat L = split.matrix;
    sys.nonlinear = [map, x_star, L, residual](const Vec& x) -> Vec {
        return map(x_star + x) - x_star - L * x - residual;
    };
    sys.gamma = gamma;
    sys.gamma_analytic = gamma_analytic;
    sys.region_radius = region_radius;
    return sys;
}

SplitSystem build_split_system_at_origin(const MapFn& nonlinear_part,
                                         const SplitLinearMap& split, double gamma,
                                         bool gamma_analytic, double region_radius) {
    SplitSystem sys;
    sys.split = split;
    sys.norm = build_adapted_norm(split);
    sys.nonlinear = nonlinear_part;
    sys.gamma = gamma;
    sys.gamma_analytic = gamma_analytic;
    sys.region_radius = region_radius;
    return sys;
}

Mat numeric_jacobian(const MapFn& map, const Vec& x, double h) {
    const int d = static_cast<int>(x.size());
    Mat J(d, d);
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (map(xp) - map(xm)) / (2.0 * h);
    }
    return J;
}

}  // namespace lipdyn
