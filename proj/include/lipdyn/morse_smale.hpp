#pragma once

// Connection structure between hyperbolic equilibria: mesh orbits launched
// along local unstable graphs, confirmed ball entries, the acyclicity flag
// with transitivity, and the perturbation stability experiment.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lipdyn/perturbation.hpp"
#include "lipdyn/transversality.hpp"

namespace lipdyn {

struct EquilibriumNode {
    int id = 0;
    Vec x_star;
    SplitLinearMap split;
    HyperbolicCertificate cert;
    SplitSystem sys;                 // shifted system at the equilibrium
    LipschitzGraph local_unstable;   // over the half isolation radius; empty grid if a sink
    LipschitzGraph local_stable;
};

struct NodeParams {
    double rho = 1.0;
    double delta = 0.5;              // ball radius for the gamma measurement
    CertifyOptions certify;
    GraphTransformParams transform;
    double chart_radius_frac = 0.5;  // of the isolation radius
    int max_graph_dim = 3;           // sides wider than this keep a trivial chart
};

// Certify (strong required) and build both local graphs at an equilibrium.
EquilibriumNode make_equilibrium_node(const MapFn& map, const Vec& x_star, int id,
                                      const NodeParams& params = {});

enum class OrbitTerminal { ConvergedInBall, ExitedDomain, HorizonEnd };

struct BallHit {
    int node_id = -1;
    int entry_index = -1;  // first confirmed step inside the ball
};

// A mesh orbit records every confirmed ball entry along the way; it stops at
// a sink (or on convergence), at the box boundary, or at the horizon.
struct MeshOrbit {
    int mesh_index = 0;
    OrbitTerminal terminal = OrbitTerminal::HorizonEnd;
    std::vector<BallHit> hits;
    std::vector<Vec> points;
};

struct DetectParams {
    int mesh_count = 24;         // points per unstable sphere (dim_u >= 2)
    int horizon = 400;
    int k_confirm = 10;          // shrinking steps required to confirm an entry
    double shrink_factor = 0.999;
    Vec domain_lo, domain_hi;    // leaving this box terminates the orbit
    int backward_steps = 10;
    double backward_slack = 0.05;
    double conv_tol = 1e-12;     // step size treated as converged
};

enum class ConnectionStatus { Found, Absent, Inconclusive };

struct ConnectionWitness {
    int source_id = 0;
    int target_id = 0;
    int mesh_index = 0;
    std::vector<Vec> orbit;
    int entry_index = -1;
    double backward_factor = 0.0;   // max backward step factor along the source graph
    bool backward_ok = false;
    std::optional<TransversalWitness> transversal;
};

struct ConnectionOutcome {
    ConnectionStatus status = ConnectionStatus::Inconclusive;
    std::optional<ConnectionWitness> witness;
    std::vector<MeshOrbit> orbits;
};

// Launch mesh orbits from the source's local unstable sphere and look for
// confirmed entries into the target's isolation ball. Throws HorizonExceeded
// when neither a connection nor full resolution was reached.
ConnectionOutcome detect_connection(const MapFn& map, const EquilibriumNode& source,
                                    const EquilibriumNode& target,
                                    const std::vector<EquilibriumNode>& all_nodes,
                                    const DetectParams& params);

struct NodeSummary {
    int id = 0;
    Vec x_star;
    int dim_u = 0, dim_s = 0;
    double a = 0.0, b = 0.0, gamma = 0.0;
    double isolation_radius = 0.0;
    bool strong = false;
};

struct Dg1Report {
    int n_samples = 0;
    int n_settled = 0;      // orbit ends inside some isolation ball
    int n_escaped = 0;      // orbit leaves the working box
    int n_wandering = 0;    // neither, within the horizon
    bool ok = false;        // every boxed orbit settles
};

struct ConnectionGraph {
    std::vector<NodeSummary> nodes;
    std::vector<ConnectionWitness> edges;
    std::vector<std::pair<int, int>> inconclusive;  // unresolved ordered pairs
    bool dg_flag = false;                           // acyclic, no self-edges
    std::vector<int> cycle;                         // witness cycle when not
    bool transitive_ok = true;
    std::vector<std::array<int, 3>> transitivity_gaps;  // i->j->k without i->k
    Dg1Report dg1;
};

struct BuildGraphParams {
    DetectParams detect;
    int dg1_samples = 200;
    int dg1_horizon = 600;
    std::uint64_t seed = 31;
};

// First directed cycle found (self-edges count), empty when the edge set is
// acyclic. DFS back-edge detection; the returned vertices list one loop.
std::vector<int> find_directed_cycle(const std::vector<std::pair<int, int>>& edges);

ConnectionGraph build_connection_graph(const MapFn& map,
                                       const std::vector<EquilibriumNode>& nodes,
                                       const BuildGraphParams& params);

struct EquivalenceReport {
    bool equivalent = false;
    std::vector<std::pair<int, int>> missing_in_b;  // edges of A absent from B
    std::vector<std::pair<int, int>> missing_in_a;
};

// Compare edge sets under a node pairing (identity by default). Throws
// NodeCountMismatch when the graphs have different node counts.
EquivalenceReport check_geometric_equivalence(const ConnectionGraph& a, const ConnectionGraph& b,
                                              const std::vector<int>& pairing = {});

struct StabilityStage {
    double eta = 0.0;
    bool continued_ok = false;
    bool certs_ok = false;
    bool equivalent = false;
    double max_displacement = 0.0;
    double epsilon = 0.0;
    int n_edges = 0;
    ConnectionGraph graph;
    std::string note;
};

struct StabilityReport {
    ConnectionGraph base_graph;
    std::vector<StabilityStage> stages;
    double largest_equivalent_eta = 0.0;
    bool all_equivalent = true;
};

struct StabilityParams {
    BuildGraphParams graph;
    NodeParams node;
    ContinuationParams continuation;
};

// The full experiment: build the base connection graph, then per family member
// continue the equilibria, rebuild nodes and the graph, and compare.
StabilityReport run_stability_experiment(const PerturbationFamily& family,
                                         const std::vector<Vec>& base_equilibria,
                                         const StabilityParams& params);

}  // namespace lipdyn
