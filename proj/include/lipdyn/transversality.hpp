#pragma once

// Intersections of transversally aligned graphs: locating the unique common
// point of two Lipschitz graphs over complementary factors and recentering
// charts there.

#include <cstdint>
#include <optional>
#include <vector>

#include "lipdyn/lipschitz_graph.hpp"
#include "lipdyn/split_system.hpp"

namespace lipdyn {

// A graph chart y -> other-factor coordinates over the closed ball of the
// stated radius. `lip` is a certified or measured Lipschitz constant.
struct Chart {
    MapFn fn;
    int dim_dom = 0;
    int dim_cod = 0;
    double radius = 0.0;
    double lip = 0.0;
};

Chart chart_from_graph(const LipschitzGraph& g);

struct IntersectParams {
    double fp_tol = 1e-11;
    int max_iter = 2000;
    int grid_per_axis = 41;     // coarse scan for the non-contractive path
    int refine_levels = 8;
    int n_check = 400;          // samples for the closeness hypothesis
    std::uint64_t seed = 17;
    // References satisfying Lip <= c < 1 that the perturbed charts must stay
    // close to. When absent, the charts themselves are taken as references.
    std::optional<Chart> theta_ref;
    std::optional<Chart> sigma_ref;
    double c = 0.0;             // 0: use max of reference lip constants
};

struct IntersectionResult {
    Vec y1;            // first-factor coordinates of the intersection
    Vec y2;            // second-factor coordinates, = theta(y1)
    int iterations = 0;
    double residual = 0.0;
    bool used_grid_path = false;
    double closeness_theta = 0.0;  // measured sup |theta - theta_ref| on the ball
    double closeness_sigma = 0.0;
    double c_used = 0.0;
};

// Find y1 in the radius-r/2 ball with sigma(theta(y1)) = y1, where theta maps
// factor 1 to factor 2 and sigma the other way. Verifies the closeness
// hypothesis sup|theta - ref| <= (1-c) r / 2 first. Falls back to a grid scan
// when Lip(theta) Lip(sigma) >= 1 and the domain dimension is at most 3.
IntersectionResult intersect_graphs(const Chart& theta, const Chart& sigma,
                                    const IntersectParams& params = {});

struct TransversalWitness {
    Vec y1;                 // intersection parameters in the original charts
    Vec y2;
    double radius0 = 0.0;   // ball radius on which the recentered charts live
    Chart chart_theta;      // recentered graphs vanishing at the origin
    Chart chart_sigma;
    double lip_theta = 0.0;
    double lip_sigma = 0.0;
    double residual = 0.0;
};

// Shift both charts so the intersection sits at the origin of the pair of
// factors. Throws NotOnBothGraphs / NoRoomToRecenter.
TransversalWitness recenter_at_intersection(const Chart& theta, const Chart& sigma,
                                            const Vec& y1, double tol = 1e-8);

struct TransversalCheck {
    bool transversal = false;
    double lip_theta = 0.0;
    double lip_sigma = 0.0;
    double origin_residual_theta = 0.0;
    double origin_residual_sigma = 0.0;
    std::string reason;
};

// Decide whether two complementary graph charts through a common point meet
// transversally: both pass through the origin and both Lipschitz constants
// are below one. Throws DecompositionMismatch on incompatible dimensions.
TransversalCheck certify_transversal(const Chart& theta, const Chart& sigma,
                                     double tol = 1e-8);

}  // namespace lipdyn
