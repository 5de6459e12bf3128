#pragma once

// Invariant manifolds as fixed points of the graph transform: preimage solves,
// single sweeps, full iteration, and verification probes.

#include <cstdint>

#include "lipdyn/lipschitz_graph.hpp"
#include "lipdyn/split_system.hpp"

namespace lipdyn {

// Radial retraction extension: agrees with n on the closed ball of radius r in
// the given norm, N(r x/||x||) outside. Doubles the Lipschitz constant at worst.
MapFn extend_lipschitz(const MapFn& n, double r, const NormFn& norm);

struct PreimageResult {
    Vec xi;          // domain coordinates of the preimage
    int iterations = 0;
    double residual = 0.0;
};

// Solve xi = Lu^{-1} target - Lu^{-1} N_u(xi + theta(xi)) by Picard iteration
// (a 2 gamma / a contraction under the smallness condition).
PreimageResult solve_preimage(const SplitSystem& sys, const LipschitzGraph& graph,
                              const Vec& target, double fp_tol = 1e-12, int max_iter = 200);

struct GraphTransformParams {
    double radius = 1.0;
    std::vector<int> nodes_per_axis;  // empty: 129 nodes per gridded axis
    double tol = 1e-10;               // sup-norm sweep-to-sweep stop
    int max_sweeps = 200;
    double fp_tol = 1e-12;
    int max_iter = 200;
};

// One sweep of the transform over the grid. Asserts the Lipschitz re-measure
// bound for graphs with Lip <= 1.
LipschitzGraph graph_transform_step(const SplitSystem& sys, const LipschitzGraph& graph,
                                    double fp_tol = 1e-12, int max_iter = 200);

struct ManifoldResult {
    LipschitzGraph graph;
    int sweeps = 0;
    bool converged = false;
    double final_update = 0.0;           // last sup-norm sweep difference
    double contraction_sup = 0.0;        // max ratio of successive sup updates
    double contraction_metric = 0.0;     // same in the relative graph metric
    double contraction_bound = 0.0;      // (b + 2 gamma) / (a - 2 gamma)
    double lip_bound = 0.0;              // gamma / (a - b - 3 gamma), inf if vacuous
};

// Iterate from the zero section until the sup update falls below tol.
// Throws NoSpectralGapAtRho / SmallnessViolated / NotConverged.
ManifoldResult compute_invariant_graph(const SplitSystem& sys, GraphDirection direction,
                                       const GraphTransformParams& params);

struct GraphVerifyParams {
    int n_probe = 64;
    double invariance_tol = 1e-8;
    int rate_window = 20;
    double rate_slack = 0.01;
    bool check_rho_star = true;
    double rho_star_frac = 0.02;
    double rho_star_tol = 1e-8;
    std::uint64_t seed = 1;
};

struct GraphVerifyReport {
    double invariance_residual = 0.0;
    bool invariance_ok = false;
    double max_rate = 0.0;   // forward step factor (stable) / backward (unstable)
    double rate_bound = 0.0;
    bool rate_ok = false;
    double rho_star_sup_diff = 0.0;
    bool rho_star_ok = true;
    double homeo_product = 0.0;          // gamma * ||L^{-1}|| sufficient check
    bool homeo_applicable = false;
    bool homeo_ok = true;
    bool ok() const { return invariance_ok && rate_ok && rho_star_ok; }
};

GraphVerifyReport verify_graph(const SplitSystem& sys, const LipschitzGraph& graph,
                               const GraphTransformParams& tparams,
                               const GraphVerifyParams& vparams);

// Backward orbit along an unstable graph by chained preimage solves; returns
// full-space points x_0, x_{-1}, ..., x_{-steps}.
std::vector<Vec> backward_orbit_on_graph(const SplitSystem& sys, const LipschitzGraph& graph,
                                         const Vec& xi0, int steps, double fp_tol = 1e-12,
                                         int max_iter = 200);

// Solve S(x) = y by Picard on x = L^{-1}(y - N(x)); valid when
// gamma * ||L^{-1}|| < 1. Used for backward orbits of arbitrary points.
Vec solve_backward_full(const SplitSystem& sys, const Vec& y, double fp_tol = 1e-12,
                        int max_iter = 500);

}  // namespace lipdyn
