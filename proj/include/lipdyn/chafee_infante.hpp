#pragma once

// Spectral Galerkin truncation of the scalar reaction-diffusion problem
// u_t - u_xx = lambda (u - u^3) + eta sin(u_x) on (0, pi) with Dirichlet
// conditions: exponential time differencing time-1 map, equilibrium structure,
// energy functional, and the composition-operator remainder diagnostic.

#include <cstdint>
#include <utility>
#include <vector>

#include "lipdyn/perturbation.hpp"

namespace lipdyn {

struct GalerkinModel {
    int modes = 16;
    double lambda = 2.0;
    double eta = 0.0;
    double dt = 0.01;
    int steps_per_unit = 100;
    int dealias_points = 0;  // collocation grid size; 0 selects 4m
    double r_cut = 0.0;      // reaction cutoff turns on here, off at r_cut + 1

    // Precomputed tables: basis values/derivatives at the collocation points,
    // per-mode integrating factors, and the quadrature weight pi / M.
    Mat val_at, der_at;
    Vec decay, etd_weight, k2;
    double quad_w = 0.0;

    int dim() const { return modes; }
};

struct GalerkinOptions {
    double dt = 0.01;
    int steps_per_unit = 100;
    int dealias_points = 0;   // 0: 4m
    double r_cut = 0.0;       // 0: probe orbits choose 2x the observed radius
    int probe_units = 30;
    int probe_tail = 10;
};

GalerkinModel make_galerkin_model(int modes, double lambda, double eta,
                                  const GalerkinOptions& opts = {});

// Coefficient norms: plain L2 and the gradient-weighted H1 norm.
double h1_norm(const GalerkinModel& model, const Vec& c);
double cutoff_factor(const GalerkinModel& model, double h1);

// One ETD step and the full time-1 map.
Vec etd_step(const GalerkinModel& model, const Vec& c);
Vec time_one_map(const GalerkinModel& model, const Vec& c);
MapModel build_time_one_map(const GalerkinModel& model);

// Chain-rule product of the per-step linearizations along the orbit of c.
Mat time_one_jacobian(const GalerkinModel& model, const Vec& c);

// Coefficient change of variables c_k -> k c_k, under which the Euclidean
// norm is the H1 norm of u. Hyperbolicity certificates and continuation run
// there: the derivative forcing is eta-small in H1 but not mode-uniformly in
// plain coefficients.
Vec to_h1_coords(const GalerkinModel& model, const Vec& c);
Vec from_h1_coords(const GalerkinModel& model, const Vec& ch);
MapFn time_one_map_h1(const GalerkinModel& model);
Mat time_one_jacobian_h1(const GalerkinModel& model, const Vec& c);

// Reaction and forcing terms projected back onto the basis (for bound checks).
Vec reaction_term(const GalerkinModel& model, const Vec& c);
Vec forcing_term(const GalerkinModel& model, const Vec& c);

// Stationary system k^2 c = P[lambda (u - u^3) g + eta sin(u_x)] and its
// Jacobian, for the Newton oracle.
Vec stationary_residual(const GalerkinModel& model, const Vec& c);
Mat stationary_jacobian(const GalerkinModel& model, const Vec& c);

// Lyapunov functional: integral of u_x^2/2 - lambda (u^2/2 - u^4/4); the
// quartic term uses an exact trigonometric quadrature.
double energy(const GalerkinModel& model, const Vec& c);

// Profile samples (x_i, u(x_i)) on an n-point interior grid, for export.
std::vector<std::pair<double, double>> profile(const GalerkinModel& model, const Vec& c, int n);

struct GalerkinEquilibrium {
    Vec coeffs;
    double h1 = 0.0;
    int unstable_count = 0;
    bool stable = false;
    bool hyperbolic = true;
};

struct EquilibriaParams {
    double newton_tol = 1e-12;
    int max_newton = 200;
    double dedupe_tol = 1e-6;
    double resonance_tol = 1e-9;
    // Used only for eta > 0 (continuation from the eta = 0 roots).
    double cert_delta = 0.05;
    CertifyOptions certify;
    ContinuationParams continuation;
};

// All equilibria of the truncated system: Newton from single-mode seeds for
// eta = 0, continuation of those roots otherwise. Throws ResonantLambda when
// lambda sits on a square, SeedExhausted when seeded roots collapse.
std::vector<GalerkinEquilibrium> find_equilibria(const GalerkinModel& model,
                                                 const EquilibriaParams& params = {});

struct CountRow {
    double lambda = 0.0;
    int expected = 0;
    int found = 0;
    bool ok = false;
};

// Run the count oracle 2n+1 (n the number of modes below lambda) per value.
// Throws CountMismatch when some row fails.
std::vector<CountRow> verify_equilibrium_count(const std::vector<double>& lambdas, int modes,
                                               const EquilibriaParams& params = {},
                                               const GalerkinOptions& opts = {});

struct NemytskiiSpec {
    bool affine = false;   // f(t) = a t + b when set, f = sin otherwise
    double a = 2.0, b = 1.0;
    double u0 = 0.0;       // constant background state
    double s0 = 1.0;       // jump height
    double p = 2.0;
    int quad_points = 4096;
};

struct NemytskiiResult {
    std::vector<std::pair<double, double>> rows;  // (radius, ratio)
    double limit = 0.0;
};

// Remainder ratio ||f(u0 + s0 Xi_r) - f(u0) - f'(u0) s0 Xi_r||_p / ||s0 Xi_r||_p
// over shrinking indicator bumps centered at pi/2. Affine f gives zero; any
// other f has a nonvanishing limit, the obstruction to differentiability.
NemytskiiResult nemytskii_remainder_diagnostic(const NemytskiiSpec& spec,
                                               const std::vector<double>& radii);

}  // namespace lipdyn
