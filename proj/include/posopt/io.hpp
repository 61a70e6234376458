#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "posopt/bellman.hpp"
#include "posopt/core.hpp"
#include "posopt/network.hpp"
#include "posopt/policy.hpp"

namespace posopt {

/// Unreadable/unwritable file.
class file_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally invalid content (bad JSON, wrong types, non-finite numbers,
/// out-of-range or duplicate sparse indices, unknown keys).
class data_format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal representation; deterministic.
std::string format_double(double value);

// Problem files: {"n", "M", "A", "B_blocks", "E", "s", "r_blocks"} with each
// matrix either dense (array of row arrays) or sparse
// ({"shape":[r,c],"rows":[],"cols":[],"vals":[]}). NaN/Inf are rejected.
ProblemData problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const ProblemData& prob);
ProblemData load_problem(const std::string& path);
void save_problem(const ProblemData& prob, const std::string& path);

// Graph files: {"nodes":[{"id","state_cost","retention","diffusion":
// [{"target","rate"}]}], "edges":[{"origin","dest","transport_cost",
// "efficiency"}], "target": optional id}.
GraphSpec graph_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const GraphSpec& graph);
GraphSpec load_graph(const std::string& path);
void save_graph(const GraphSpec& graph, const std::string& path);

nlohmann::json solve_report_to_json(const SolveReport& report);

/// Per-coordinate iterate trace: header `iter,p_1,...,p_n`, row 0 is the
/// starting point, then one row per iteration. Requires record_trace.
std::string solve_trace_csv(const SolveReport& report);

/// Header `t,x_1,...,x_n,cost_t,total`; one row per visited state, with the
/// stage cost incurred when leaving it (0 on the final row) and the running
/// total through that step.
std::string trajectory_csv(const Trajectory& traj);

/// Per-partition selected action index (null for no action), reduced costs,
/// and the gain in sparse triplet form.
nlohmann::json policy_to_json(const ProblemData& prob, const Policy& policy);

nlohmann::json validation_report_to_json(const ValidationReport& report);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace posopt
