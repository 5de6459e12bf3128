#pragma once

// Map models and the shifted decomposition S = L + N around a fixed point,
// carried together with the spectral split and adapted norms.

#include <optional>

#include "lipdyn/spectral_split.hpp"

namespace lipdyn {

using MapFn = std::function<Vec(const Vec&)>;

struct MapModel {
    MapFn evaluator;
    Vec domain_lo, domain_hi;               // working box
    std::optional<Vec> fixed_point_hint;
    std::optional<double> lip_data;          // analytic Lipschitz constant of the
                                             // nonlinear part, when known
    int dim() const { return static_cast<int>(domain_lo.size()); }

    Vec operator()(const Vec& x) const { return evaluator(x); }
    bool in_domain(const Vec& x) const {
        for (int i = 0; i < x.size(); ++i)
            if (x[i] < domain_lo[i] || x[i] > domain_hi[i]) return false;
        return true;
    }
};

// S(x) = T(x + x_star) - x_star = L x + N(x), with N(0) = 0 enforced exactly
// (the equilibrium residual is absorbed into N's offset).
struct SplitSystem {
    SplitLinearMap split;
    AdaptedNorm norm;
    MapFn nonlinear;          // N on the full space
    double gamma = 0.0;       // Lip(N) in the adapted norm on the working region
    bool gamma_analytic = false;
    double region_radius = 0.0;  // adapted-norm radius on which gamma was certified

    int dim() const { return split.dim(); }
    int dim_u() const { return split.dim_u(); }
    int dim_s() const { return split.dim_s(); }

    Vec map(const Vec& x) const { return split.matrix * x + nonlinear(x); }

    // Nonlinearity components in subspace coordinates.
    Vec n_u(const Vec& x) const { return norm.coords_u(nonlinear(x)); }
    Vec n_s(const Vec& x) const { return norm.coords_s(nonlinear(x)); }

    Mat block_u() const { return split.block_u(); }
    Mat block_s() const { return split.block_s(); }
};

// Assemble the shifted system for a map around an equilibrium, against a given
// linear part. equilibrium_tol guards ||T(x*) - x*||.
SplitSystem build_split_system(const MapFn& map, const Vec& x_star, const SplitLinearMap& split,
                               double gamma, bool gamma_analytic, double region_radius,
                               double equilibrium_tol = 1e-9);

// Same, for maps already written as fixed point 0 with linear part = split.matrix.
SplitSystem build_split_system_at_origin(const MapFn& nonlinear_part,
                                         const SplitLinearMap& split, double gamma,
                                         bool gamma_analytic, double region_radius);

// Central finite-difference Jacobian, the default linearization when no
// analytic matrix is supplied.
Mat numeric_jacobian(const MapFn& map, const Vec& x, double h = 1e-6);

}  // namespace lipdyn
