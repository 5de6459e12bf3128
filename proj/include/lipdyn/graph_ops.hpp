#pragma once

// Near-identity inversion on balls and graph reparametrization: re-expressing
// a perturbed parametrized manifold patch as a graph again.

#include <cstdint>
#include <utility>

#include "lipdyn/lipschitz_graph.hpp"
#include "lipdyn/split_system.hpp"

namespace lipdyn {

struct NearIdentityMap {
    MapFn map;
    int dim = 0;
    double radius = 0.0;   // ball on which dev bounds were measured
    double sup_dev = 0.0;  // ||g - I||_inf
    double lip_dev = 0.0;  // ||g - I||_Lip
};

// Sample the deviation of g from the identity over the radius-r ball.
NearIdentityMap measure_near_identity(const MapFn& g, int dim, double radius,
                                      const NormFn& norm, int n_samples, std::uint64_t seed,
                                      double inflation = 1.1);

// Solve g(x) = y by Picard on x -> y + x - g(x). Requires lip_dev < 1/2 and
// ||y|| <= radius - sup_dev so the solution is guaranteed inside the ball.
// Throws NotNearIdentity / TargetOutsideGuaranteedImage / InversionFailed.
Vec invert_near_identity(const NearIdentityMap& g, const Vec& y, const NormFn& norm,
                         double fp_tol = 1e-12, int max_iter = 500);

// psi maps domain-subspace coordinates to an image point split into
// (domain-subspace component, codomain-subspace component).
using ParamFn = std::function<std::pair<Vec, Vec>(const Vec&)>;

struct ReparamParams {
    std::vector<int> nodes_per_axis;  // empty: copy the reference graph's grid
    int n_samples = 4000;             // for the epsilon measurement
    std::uint64_t seed = 11;
    double fp_tol = 1e-12;
    int max_iter = 500;
};

struct ReparamResult {
    LipschitzGraph graph;        // over the shrunk box of radius r - eps
    double epsilon = 0.0;        // measured max(sup, Lip) deviation of psi from id + theta
    double lip_bound = 0.0;      // (Lip theta + eps) / (1 - eps)
    double sup_bound = 0.0;      // (1 + Lip theta) * eps
    double measured_sup_diff = 0.0;  // vs the reference on the common domain
};

// Re-express the image of psi as a graph over the domain subspace, using the
// reference graph theta to measure the near-identity deviation. The norms are
// those of the graph's own domain/codomain coordinates.
ReparamResult reparametrize_unstable_graph(const ParamFn& psi, const LipschitzGraph& theta,
                                           const NormFn& dom_norm, const NormFn& cod_norm,
                                           const ReparamParams& params = {});

// Dual: psi over the stable side, with (u, s) image components swapped in role.
ReparamResult reparametrize_stable_graph(const ParamFn& psi, const LipschitzGraph& sigma,
                                         const NormFn& dom_norm, const NormFn& cod_norm,
                                         const ReparamParams& params = {});

struct CurveFitResult {
    LipschitzGraph graph;   // recentered at the curve midpoint parameter
    Vec center_dom;         // domain coordinate of the recentering point
    Vec center_cod;
    bool monotone = true;
};

// Fit a graph to a sampled curve (1-dimensional domain): sort by the domain
// coordinate, require strict monotonicity, interpolate onto a symmetric grid
// around the midpoint. Used for grown manifold charts far from near-identity.
CurveFitResult fit_graph_to_curve(const std::vector<std::pair<double, Vec>>& samples,
                                  int nodes, GraphDirection direction, double rho);

}  // namespace lipdyn
