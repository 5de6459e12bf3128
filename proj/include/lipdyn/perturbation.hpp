#pragma once

// Response of hyperbolic equilibria and their invariant graphs to small
// Lipschitz perturbations of the map: continuation of the fixed point,
// tracking along a parameter family, and manifold displacement bounds.

#include <cstdint>
#include <optional>
#include <vector>

#include "lipdyn/graph_transform.hpp"
#include "lipdyn/hyperbolicity.hpp"

namespace lipdyn {

// A one-parameter family of maps. member(0) must be the base map; etas lists
// the parameter values of interest in ascending order.
struct PerturbationFamily {
    std::function<MapFn(double)> member;
    std::vector<double> etas;
    int dim = 0;
};

struct ClosenessEstimate {
    double sup_dev = 0.0;
    double lip_dev = 0.0;
    double value = 0.0;  // max of the two
    bool analytic = false;
};

// Sampled sup and Lipschitz deviation between two maps over a ball (adapted
// norm on values, same norm on arguments), inflated by the given factor.
ClosenessEstimate measure_closeness(const MapFn& base, const MapFn& pert, const Vec& center,
                                    double radius, const NormFn& norm, int n_samples,
                                    std::uint64_t seed, double inflation = 1.1);

struct ContinuationParams {
    double fp_tol = 1e-13;
    int max_iter = 500;
    std::optional<double> delta1;  // working radius; defaults to the region radius
    std::optional<double> epsilon; // analytic closeness; defaults to a sampled value
    int n_samples = 20000;
    std::uint64_t seed = 23;
};

struct ContinuationResult {
    Vec x_star;               // continued equilibrium in ambient coordinates
    int iterations = 0;
    double residual = 0.0;    // adapted norm of T1(x*) - x*
    double displacement = 0.0;
    double epsilon_used = 0.0;
    double delta1_used = 0.0;
    double bound_delta1 = 0.0;  // eps R / (1 - (gamma+eps) R)
    double gamma_pert = 0.0;    // gamma + eps
};

// Continue the equilibrium of `base` under the perturbed map. Preconditions:
// (eps + gamma delta1) R <= delta1 and (gamma + eps) R < 1, else
// PreconditionFailed naming the violated inequality.
ContinuationResult continue_equilibrium(const SplitSystem& base, const HyperbolicCertificate& cert,
                                        const MapFn& perturbed, const Vec& base_x_star,
                                        const ContinuationParams& params = {});

struct EquilibriumRecord {
    int id = 0;
    Vec x_star;
    SplitLinearMap split;
    HyperbolicCertificate cert;
};

struct FamilyTrackRow {
    double eta = 0.0;
    int id = 0;
    Vec x_star;
    double displacement = 0.0;
    double residual = 0.0;
    double bound = 0.0;       // theoretical displacement bound at this eta
    double epsilon = 0.0;
    double gamma_pert = 0.0;
    bool within_bound = false;
};

struct FamilyTrackReport {
    std::vector<FamilyTrackRow> rows;
    double max_eta_tracked = 0.0;  // largest eta with all preconditions intact
    bool count_preserved = true;
    bool displacement_monotone = true;  // sup displacement shrinks as eta does
    std::string stop_reason;
};

struct FamilyTrackParams {
    ContinuationParams continuation;
    double min_separation_factor = 2.0;
    double monotone_slack = 1.10;
};

// Track every equilibrium across the family. Requires strong certificates and
// pairwise separation of at least 2 max(delta1); throws SmallnessViolated or
// SeparationViolated otherwise. Stops at the first eta whose preconditions
// fail and records it.
FamilyTrackReport track_equilibrium_family(const PerturbationFamily& family,
                                           const std::vector<EquilibriumRecord>& equilibria,
                                           const FamilyTrackParams& params = {});

struct DeviationRow {
    double eta = 0.0;
    double sup_dev = 0.0;      // measured sup |theta_eta - theta_0| on the common box
    double lip_dev = 0.0;      // measured Lipschitz constant of theta_eta
    double sup_bound = 0.0;    // nonlinearity displacement / (1 - b - gamma)
    double lip_bound = 0.0;    // K / (a - b - 2 gamma - K)
    double k_eta = 0.0;
    bool sup_ok = false;
    bool lip_ok = false;
};

struct DeviationParams {
    int n_samples = 20000;
    std::uint64_t seed = 29;
    double slack = 1.05;
    double inflation = 1.1;
};

struct ManifoldDeviationReport {
    std::vector<DeviationRow> rows;
    bool all_ok = true;
};

// Compare perturbed unstable graphs against the base graph of a straightened
// system (base graph identically zero) and check the displacement bounds.
ManifoldDeviationReport manifold_deviation(
    const SplitSystem& base, const LipschitzGraph& base_graph,
    const std::vector<std::tuple<double, SplitSystem, LipschitzGraph>>& perturbed,
    const DeviationParams& params = {});

}  // namespace lipdyn
