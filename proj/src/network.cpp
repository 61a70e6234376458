#include "posopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "posopt/bellman.hpp"
#include "posopt/rng.hpp"

namespace posopt {

Index GraphSpec::node_index(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<Index>(i);
  }
  return -1;
}

namespace {

constexpr double kConservationTol = 1e-12;

void check_graph_structure(const GraphSpec& graph) {
  std::set<std::string> ids;
  for (const auto& node : graph.nodes) {
    if (!ids.insert(node.id).second) {
      throw graph_error("duplicate node id '" + node.id + "'");
    }
    if (node.state_cost < 0.0) {
      throw graph_error("node '" + node.id + "': negative state cost");
    }
    if (node.retention < 0.0 || node.retention > 1.0) {
      throw graph_error("node '" + node.id + "': retention outside [0, 1]");
    }
    double out = node.retention;
    for (const auto& d : node.diffusion) {
      if (graph.node_index(d.target) < 0) {
        throw graph_error("node '" + node.id + "': diffusion to unknown node '" +
                          d.target + "'");
      }
      if (d.target == node.id) {
        throw graph_error("node '" + node.id + "': diffusion to itself");
      }
      if (d.rate < 0.0) {
        throw graph_error("node '" + node.id + "': negative diffusion rate");
      }
      out += d.rate;
    }
    if (out > 1.0 + kConservationTol) {
      throw graph_error("node '" + node.id +
                        "': retention plus diffusion exceeds 1");
    }
  }
  for (const auto& edge : graph.edges) {
    if (graph.node_index(edge.origin) < 0 || graph.node_index(edge.dest) < 0) {
      throw graph_error("edge " + edge.origin + "->" + edge.dest +
                        ": unknown endpoint");
    }
    if (edge.origin == edge.dest) {
      throw graph_error("edge " + edge.origin + "->" + edge.dest +
                        ": self-loop not allowed");
    }
    if (edge.transport_cost < 0.0) {
      throw graph_error("edge " + edge.origin + "->" + edge.dest +
                        ": negative transport cost");
    }
  }
}

void check_shortest_path_mode(const GraphSpec& graph) {
  check_graph_structure(graph);
  if (!graph.target) {
    throw graph_error("shortest-path mode requires a target node");
  }
  if (graph.node_index(*graph.target) < 0) {
    throw graph_error("target '" + *graph.target + "' is not a node");
  }
  for (const auto& node : graph.nodes) {
    const bool is_target = node.id == *graph.target;
    if (is_target && node.state_cost != 0.0) {
      throw graph_error("target node must have zero state cost");
    }
    if (!is_target && node.state_cost <= 0.0) {
      throw graph_error("node '" + node.id +
                        "': non-target state cost must be positive, otherwise "
                        "waiting in the node is free");
    }
    if (node.retention != 1.0 || !node.diffusion.empty()) {
      throw graph_error("node '" + node.id +
                        "': shortest-path mode needs retention 1 and no "
                        "diffusion");
    }
  }
  for (const auto& edge : graph.edges) {
    if (edge.efficiency != 1.0) {
      throw graph_error("edge " + edge.origin + "->" + edge.dest +
                        ": shortest-path mode needs unit efficiency");
    }
  }
}

/// Edge indices grouped by origin node, in edges-array order.
std::vector<std::vector<size_t>> edges_by_origin(const GraphSpec& graph) {
  std::vector<std::vector<size_t>> grouped(graph.nodes.size());
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    const Index o = graph.node_index(graph.edges[e].origin);
    grouped[static_cast<size_t>(o)].push_back(e);
  }
  return grouped;
}

ProblemData assemble_from_graph(const GraphSpec& graph, bool identity_dynamics) {
  const Index n = static_cast<Index>(graph.nodes.size());
  ProblemData prob;
  prob.n = n;
  prob.M = n;

  std::vector<Eigen::Triplet<double>> a_entries, e_entries;
  for (Index i = 0; i < n; ++i) {
    const NodeSpec& node = graph.nodes[static_cast<size_t>(i)];
    const double retention = identity_dynamics ? 1.0 : node.retention;
    if (retention != 0.0) {
      a_entries.emplace_back(i, i, retention);
      e_entries.emplace_back(i, i, retention);  // E_ii = A_ii
    }
    if (!identity_dynamics) {
      for (const auto& d : node.diffusion) {
        if (d.rate != 0.0) {
          a_entries.emplace_back(graph.node_index(d.target), i, d.rate);
        }
      }
    }
  }
  prob.A = SpMat(n, n);
  prob.A.setFromTriplets(a_entries.begin(), a_entries.end());
  prob.E = SpMatRow(n, n);
  prob.E.setFromTriplets(e_entries.begin(), e_entries.end());

  prob.s = Vec(n);
  for (Index i = 0; i < n; ++i) {
    prob.s[i] = graph.nodes[static_cast<size_t>(i)].state_cost;
  }

  const auto grouped = edges_by_origin(graph);
  for (Index i = 0; i < n; ++i) {
    const auto& edge_ids = grouped[static_cast<size_t>(i)];
    SpMat block(n, static_cast<Index>(edge_ids.size()));
    std::vector<Eigen::Triplet<double>> entries;
    Vec r(static_cast<Index>(edge_ids.size()));
    for (size_t k = 0; k < edge_ids.size(); ++k) {
      const EdgeSpec& edge = graph.edges[edge_ids[k]];
      entries.emplace_back(i, static_cast<Index>(k), -1.0);
      entries.emplace_back(graph.node_index(edge.dest), static_cast<Index>(k),
                           edge.efficiency);
      r[static_cast<Index>(k)] = edge.transport_cost;
    }
    block.setFromTriplets(entries.begin(), entries.end());
    prob.B_blocks.push_back(std::move(block));
    prob.r_blocks.push_back(std::move(r));
  }

  const ValidationReport report = validate(prob);
  if (!report.clean()) {
    std::ostringstream os;
    os << "graph construction produced an invalid instance:";
    for (const auto& v : report.violations) os << " " << v.location << ";";
    throw graph_error(os.str());
  }
  return prob;
}

}  // namespace

ProblemData build_shortest_path(const GraphSpec& graph) {
  check_shortest_path_mode(graph);
  return assemble_from_graph(graph, /*identity_dynamics=*/true);
}

ProblemData build_flow_network(const GraphSpec& graph,
                               const FlowBuildOptions& opts) {
  check_graph_structure(graph);
  for (const auto& edge : graph.edges) {
    if (!(edge.efficiency > 0.0) || edge.efficiency > 1.0) {
      throw graph_error("edge " + edge.origin + "->" + edge.dest +
                        ": efficiency must lie in (0, 1]");
    }
  }
  if (!opts.allow_asymmetric) {
    using Key = std::tuple<std::string, std::string, double, double>;
    std::map<Key, int> count;
    for (const auto& e : graph.edges) {
      ++count[{e.origin, e.dest, e.transport_cost, e.efficiency}];
    }
    for (const auto& e : graph.edges) {
      const auto fwd = count.find({e.origin, e.dest, e.transport_cost, e.efficiency});
      const auto rev = count.find({e.dest, e.origin, e.transport_cost, e.efficiency});
      if (rev == count.end() || rev->second != fwd->second) {
        throw graph_error("pipe " + e.origin + "<->" + e.dest +
                          " is not symmetric (missing or mismatched reverse "
                          "edge); pass allow_asymmetric to accept");
      }
    }
  }
  return assemble_from_graph(graph, /*identity_dynamics=*/false);
}

GraphSpec generate_cooling_instance(Index num_nodes, std::uint64_t seed,
                                    const CoolingGenOptions& opts) {
  if (num_nodes < 2) {
    throw graph_error("generate_cooling_instance: need at least 2 nodes");
  }
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    DetRng rng(attempt == 0 ? seed
                            : derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    const size_t n = static_cast<size_t>(num_nodes);

    // Random spanning tree plus extra pipes; pipes as unordered pairs.
    std::set<std::pair<size_t, size_t>> pipes;
    for (size_t k = 1; k < n; ++k) {
      const size_t parent = static_cast<size_t>(rng.below(k));
      pipes.insert({std::min(k, parent), std::max(k, parent)});
    }
    const size_t extra_target = n / 2 + 1;
    for (size_t tries = 0; tries < 4 * n && pipes.size() < n - 1 + extra_target;
         ++tries) {
      const size_t u = static_cast<size_t>(rng.below(n));
      const size_t v = static_cast<size_t>(rng.below(n));
      if (u != v) pipes.insert({std::min(u, v), std::max(u, v)});
    }

    std::vector<std::vector<size_t>> adjacent(n);
    for (const auto& [u, v] : pipes) {
      adjacent[u].push_back(v);
      adjacent[v].push_back(u);
    }

    // Dissipation sites: at least ceil(n/5) nodes with a retention deficit.
    const size_t dissipaters = (n + 4) / 5;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    for (size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<size_t>(rng.below(i + 1))]);
    }
    std::vector<bool> dissipating(n, false);
    for (size_t k = 0; k < dissipaters; ++k) dissipating[order[k]] = true;

    GraphSpec graph;
    for (size_t i = 0; i < n; ++i) {
      NodeSpec node;
      node.id = "n" + std::to_string(i);
      node.state_cost = rng.uniform(opts.cost_min, opts.cost_max);
      if (dissipating[i]) {
        node.retention = rng.uniform(0.5, 0.85);
      } else if (rng.uniform01() < 0.3) {
        const double rate = rng.uniform(0.02, 0.1);
        const size_t to = adjacent[i][static_cast<size_t>(rng.below(adjacent[i].size()))];
        node.retention = 1.0 - rate;
        node.diffusion.push_back({"n" + std::to_string(to), rate});
      } else {
        node.retention = 1.0;
      }
      graph.nodes.push_back(std::move(node));
    }
    for (const auto& [u, v] : pipes) {
      const double cost = rng.uniform(opts.cost_min, opts.cost_max);
      const double eff = rng.uniform(opts.efficiency_min, opts.efficiency_max);
      graph.edges.push_back({"n" + std::to_string(u), "n" + std::to_string(v),
                             cost, eff});
      graph.edges.push_back({"n" + std::to_string(v), "n" + std::to_string(u),
                             cost, eff});
    }

    // Dissipation placement may strand heat; keep only convergent draws.
    const ProblemData prob = build_flow_network(graph);
    SolveOptions solve_opts;
    solve_opts.tol = 1e-9;
    solve_opts.max_iter = 50000;
    solve_opts.divergence_cap = 1e9;
    if (value_iterate(prob, solve_opts).status == SolveStatus::FixedPoint) {
      return graph;
    }
  }
  throw graph_error("generate_cooling_instance: retry budget exhausted");
}

Vec shortest_path_oracle(const GraphSpec& graph) {
  check_shortest_path_mode(graph);
  const size_t n = graph.nodes.size();
  const double inf = std::numeric_limits<double>::infinity();
  Vec dist = Vec::Constant(static_cast<Index>(n), inf);
  dist[graph.node_index(*graph.target)] = 0.0;

  // Label correcting: traversing an edge costs its transport cost plus the
  // origin's state cost (incurred once per hop). All weights nonnegative, so
  // n-1 relaxation sweeps settle every label.
  for (size_t sweep = 0; sweep + 1 < std::max<size_t>(n, 2); ++sweep) {
    bool changed = false;
    for (const auto& edge : graph.edges) {
      const Index o = graph.node_index(edge.origin);
      const Index d = graph.node_index(edge.dest);
      if (dist[d] == inf) continue;
      const double via =
          edge.transport_cost +
          graph.nodes[static_cast<size_t>(o)].state_cost + dist[d];
      if (via < dist[o]) {
        dist[o] = via;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist;
}

std::vector<Index> extract_route(const Policy& policy, const ProblemData& prob,
                                 Index origin) {
  if (origin < 0 || origin >= prob.n) {
    throw std::invalid_argument("extract_route: origin out of range");
  }
  if (prob.M != prob.n ||
      static_cast<Index>(policy.choices.size()) != prob.M) {
    throw std::invalid_argument(
        "extract_route: expected one partition per node");
  }
  std::vector<Index> route;
  std::vector<bool> seen(static_cast<size_t>(prob.n), false);
  Index cur = origin;
  while (true) {
    if (seen[static_cast<size_t>(cur)]) {
      throw std::runtime_error(
          "extract_route: cycle detected at node " + std::to_string(cur) +
          "; the cost vector does not look like a converged fixed point");
    }
    seen[static_cast<size_t>(cur)] = true;
    route.push_back(cur);
    const auto& choice = policy.choices[static_cast<size_t>(cur)];
    if (!choice) break;
    const SpMat& block = prob.B_blocks[static_cast<size_t>(cur)];
    Index dest = -1;
    for (SpMat::InnerIterator it(block, *choice); it; ++it) {
      if (it.value() > 0.0) dest = it.row();
    }
    if (dest < 0) {
      throw std::runtime_error(
          "extract_route: selected column has no destination entry; not a "
          "shortest-path instance");
    }
    cur = dest;
  }
  return route;
}

}  // namespace posopt
