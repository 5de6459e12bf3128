#pragma once

// Hyperbolicity certificates at fixed points: weak inequalities on (a, b, gamma),
// the stronger straightening threshold, coordinate straightening itself, and
// orbit dichotomy / isolation probes.

#include <cstdint>

#include "lipdyn/graph_transform.hpp"

namespace lipdyn {

struct LipEstimate {
    double value = 0.0;
    bool analytic = false;
    int pairs = 0;
};

// Max sampled difference quotient of map over the ball of the given radius
// (in `norm`), inflated by `inflation`. Passing `analytic` skips sampling.
LipEstimate estimate_lipschitz_constant(const MapFn& map, int dim, double radius,
                                        const NormFn& norm, int n_pairs, std::uint64_t seed,
                                        double inflation = 1.1,
                                        std::optional<double> analytic = std::nullopt);

// Lipschitz bound for the nonlinearity after flattening the stable manifold:
// 2 a gamma / (a - b - 3 gamma).
double flattened_lip_bound(double a, double b, double gamma);
// Lipschitz bound of the unstable graph of the flattened map.
double straightened_graph_lip(double a, double b, double gamma);
// Lipschitz bound of the nonlinearity after the full straightening.
double straightened_lip_bound(double a, double b, double gamma);

// Largest gamma (bisection, 1e-6 resolution) for which the straightening
// chain keeps all the smallness inequalities strict. Degenerate sides reduce
// to plain contraction/expansion persistence.
double strong_gamma_threshold(double a, double b, double resolvent, int dim_u, int dim_s);

struct HyperbolicCertificate {
    Vec x_star;
    double rho = 1.0;
    double a = 0.0, b = 0.0;
    int dim_u = 0, dim_s = 0;
    double gamma = 0.0;
    bool gamma_analytic = false;
    double delta = 0.0;       // radius of the ball on which gamma was measured
    double resolvent = 0.0;   // a/(a-1) + 1/(1-b)
    bool weak_flag = false;
    bool strong_flag = false;
    double gamma1_threshold = 0.0;
    double isolation_radius = 0.0;
    double epsilon0 = 0.0;    // admissible perturbation scale
    std::string failed_condition;  // first violated inequality, empty if weak
};

enum class CertLevel { None, Weak, Strong };

struct CertifyOptions {
    int n_pairs = 100000;
    std::uint64_t seed = 7;
    double equilibrium_tol = 1e-9;
    CertLevel require = CertLevel::None;  // throw SmallnessViolated if unmet
};

// Certify hyperbolicity of `map` at x_star against the given linear split, with
// the nonlinear remainder measured on the delta-ball (adapted norm).
HyperbolicCertificate certify_hyperbolic(const MapFn& map, const Vec& x_star,
                                         const SplitLinearMap& split, double delta,
                                         const CertifyOptions& opts = {});

struct StraightenResult {
    MapFn g;       // straightening change of variables (two exact shears)
    MapFn g_inv;
    SplitSystem straightened;     // same linear part, conjugated nonlinearity
    LipschitzGraph theta_tilde;   // unstable graph of the intermediate map
    double f_gamma = 0.0;         // flattened_lip_bound at the certificate gamma
    double f1_gamma = 0.0;        // straightened_lip_bound at the certificate gamma
    double unstable_flat_sup = 0.0;  // recomputed manifold sups in new coordinates
    double stable_flat_sup = 0.0;
};

// Conjugate the system so both local manifolds become the coordinate axes.
// Requires a strong certificate; throws StraighteningContractionFailed when the
// bi-Lipschitz condition fails at the certificate's gamma.
StraightenResult straighten_coordinates(const SplitSystem& sys,
                                        const HyperbolicCertificate& cert,
                                        const LipschitzGraph& unstable_graph,
                                        const LipschitzGraph& stable_graph,
                                        const GraphTransformParams& params);

struct DichotomyReport {
    int n_samples = 0;
    int n_exited = 0;
    int n_converged = 0;
    int n_undetermined = 0;
    bool ok = false;  // every sampled orbit exits or converges
};

// Sample initial conditions in the isolation ball and classify forward orbits.
DichotomyReport orbit_dichotomy_check(const SplitSystem& sys, const HyperbolicCertificate& cert,
                                      int n_samples, int horizon, std::uint64_t seed,
                                      double conv_tol = 1e-10);

// Refine a pseudo-orbit over the window [-half_window, half_window] with
// equilibrium tails, by the split forward/backward sweep. Inside the isolation
// ball the unique fixed point is the constant equilibrium sequence.
std::vector<Vec> pseudo_orbit_refine(const SplitSystem& sys, std::vector<Vec> sequence,
                                     int iterations);

}  // namespace lipdyn
