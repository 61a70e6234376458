#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posopt/core.hpp"
#include "posopt/policy.hpp"

namespace posopt {

struct Diffusion {
  std::string target;
  double rate = 0.0;
};

struct NodeSpec {
  std::string id;
  double state_cost = 0.0;   ///< s entry
  double retention = 1.0;    ///< A_ii
  std::vector<Diffusion> diffusion;  ///< off-diagonal A entries, per target
};

struct EdgeSpec {
  std::string origin;
  std::string dest;
  double transport_cost = 0.0;  ///< r entry
  double efficiency = 1.0;      ///< destination-row entry of the B column
};

/// Directed graph from which problem instances are synthesized. Node order in
/// `nodes` fixes the state indexing; partition i collects the edges whose
/// origin is node i, in `edges` order.
struct GraphSpec {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::optional<std::string> target;  ///< shortest-path mode destination

  /// Index of the node with the given id, or -1.
  Index node_index(const std::string& id) const;
};

class graph_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest-path encoding: A = E = I, one B column per edge with -1 at the
/// origin row and +1 at the destination row, partitioned by origin node.
/// Requires a target with zero state cost, strictly positive state cost
/// everywhere else (waiting must never be free), unit efficiencies, full
/// retention and no diffusion.
ProblemData build_shortest_path(const GraphSpec& graph);

struct FlowBuildOptions {
  /// Accept graphs where a directed edge lacks an identical reverse twin.
  bool allow_asymmetric = false;
};

/// Flow/cooling encoding: A has retentions on the diagonal and diffusion
/// rates off it, E is diagonal with E_ii = A_ii (so M = n), and each edge
/// contributes a column with -1 at the origin and +efficiency at the
/// destination. The construction satisfies both assumptions; the builder
/// asserts a clean validation report.
ProblemData build_flow_network(const GraphSpec& graph,
                               const FlowBuildOptions& opts = {});

struct CoolingGenOptions {
  double cost_min = 0.2;
  double cost_max = 1.0;
  double efficiency_min = 0.95;
  double efficiency_max = 1.0;  ///< exclusive
  int max_attempts = 8;
};

/// Seeded random connected pipe network in the style of the cooling-plant
/// example: every pipe appears in both directions with identical cost and
/// efficiency, at least ceil(n/5) nodes dissipate, and occasional diffusion
/// links follow the pipes. Deterministic for a fixed seed; regenerates with a
/// derived seed (bounded attempts) if value iteration fails to converge.
GraphSpec generate_cooling_instance(Index num_nodes, std::uint64_t seed,
                                    const CoolingGenOptions& opts = {});

/// Classical label-correcting distances to the target where traversing edge e
/// costs r_e + s_origin(e); +infinity for nodes that cannot reach the target.
/// Independent of the Bellman machinery, for cross-validation.
Vec shortest_path_oracle(const GraphSpec& graph);

/// Follows each node's selected edge from `origin` until a node with no
/// action is reached. A revisited node signals a cycle and throws (it cannot
/// happen at a true fixed point with positive non-target costs).
std::vector<Index> extract_route(const Policy& policy, const ProblemData& prob,
                                 Index origin);

}  // namespace posopt
