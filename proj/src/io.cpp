#include "posopt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace posopt {

using nlohmann::json;

std::string format_double(double value) {
  if (value == 0.0) return "0";  // normalizes -0
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw file_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw file_error("cannot write file: " + path);
  out << content;
  if (!out) throw file_error("write failed: " + path);
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw data_format_error(what + ": " + e.what());
  }
}

double require_finite(double v, const std::string& where) {
  if (!std::isfinite(v)) {
    throw data_format_error(where + ": non-finite number");
  }
  return v;
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw data_format_error(where + ": expected a number");
  return require_finite(j.get<double>(), where);
}

Index index_at(const json& j, const std::string& where) {
  if (!j.is_number_integer()) {
    throw data_format_error(where + ": expected an integer");
  }
  return j.get<Index>();
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool found = false;
    for (const char* k : known) {
      if (key == k) { found = true; break; }
    }
    if (!found) throw data_format_error(where + ": unknown key '" + key + "'");
  }
}

Vec vec_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw data_format_error(where + ": expected an array");
  Vec v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] =
        number_at(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    require_finite(v[i], "vector entry");
    arr.push_back(v[i]);
  }
  return arr;
}

struct TripletData {
  Index rows = 0;
  Index cols = 0;
  std::vector<Eigen::Triplet<double>> entries;
};

TripletData matrix_from_json(const json& j, const std::string& where) {
  TripletData data;
  if (j.is_array()) {
    // Dense: array of row arrays, rectangular.
    data.rows = static_cast<Index>(j.size());
    for (size_t r = 0; r < j.size(); ++r) {
      const json& row = j[r];
      if (!row.is_array()) {
        throw data_format_error(where + ": dense rows must be arrays");
      }
      if (r == 0) {
        data.cols = static_cast<Index>(row.size());
      } else if (static_cast<Index>(row.size()) != data.cols) {
        throw data_format_error(where + ": ragged dense matrix");
      }
      for (size_t c = 0; c < row.size(); ++c) {
        const double v = number_at(
            row[c], where + "(" + std::to_string(r) + "," + std::to_string(c) + ")");
        if (v != 0.0) {
          data.entries.emplace_back(static_cast<Index>(r),
                                    static_cast<Index>(c), v);
        }
      }
    }
    return data;
  }
  if (!j.is_object()) {
    throw data_format_error(where + ": expected dense array or sparse object");
  }
  reject_unknown_keys(j, {"shape", "rows", "cols", "vals"}, where);
  if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != 2) {
    throw data_format_error(where + ": sparse form needs shape [rows, cols]");
  }
  data.rows = index_at(j["shape"][0], where + ".shape[0]");
  data.cols = index_at(j["shape"][1], where + ".shape[1]");
  if (data.rows < 0 || data.cols < 0) {
    throw data_format_error(where + ": negative shape");
  }
  const json& rows = j.value("rows", json::array());
  const json& cols = j.value("cols", json::array());
  const json& vals = j.value("vals", json::array());
  if (!rows.is_array() || !cols.is_array() || !vals.is_array() ||
      rows.size() != cols.size() || rows.size() != vals.size()) {
    throw data_format_error(where + ": rows/cols/vals must be equal-length arrays");
  }
  std::set<std::pair<Index, Index>> seen;
  for (size_t k = 0; k < rows.size(); ++k) {
    const Index r = index_at(rows[k], where + ".rows");
    const Index c = index_at(cols[k], where + ".cols");
    const double v = number_at(vals[k], where + ".vals");
    if (r < 0 || r >= data.rows || c < 0 || c >= data.cols) {
      throw data_format_error(where + ": triplet index out of range");
    }
    if (!seen.insert({r, c}).second) {
      throw data_format_error(where + ": duplicate triplet entry");
    }
    if (v != 0.0) data.entries.emplace_back(r, c, v);
  }
  return data;
}

template <typename Matrix>
Matrix build_matrix(const TripletData& data) {
  Matrix mat(data.rows, data.cols);
  mat.setFromTriplets(data.entries.begin(), data.entries.end());
  mat.makeCompressed();
  return mat;
}

template <typename Matrix>
json matrix_to_json(const Matrix& mat) {
  json rows = json::array(), cols = json::array(), vals = json::array();
  for (Index outer = 0; outer < mat.outerSize(); ++outer) {
    for (typename Matrix::InnerIterator it(mat, outer); it; ++it) {
      if (it.value() == 0.0) continue;
      require_finite(it.value(), "matrix entry");
      rows.push_back(it.row());
      cols.push_back(it.col());
      vals.push_back(it.value());
    }
  }
  return json{{"shape", {mat.rows(), mat.cols()}},
              {"rows", rows},
              {"cols", cols},
              {"vals", vals}};
}

}  // namespace

ProblemData problem_from_json(const json& j) {
  if (!j.is_object()) throw data_format_error("problem: expected an object");
  reject_unknown_keys(j, {"n", "M", "A", "B_blocks", "E", "s", "r_blocks"},
                      "problem");
  for (const char* key : {"n", "M", "A", "B_blocks", "E", "s", "r_blocks"}) {
    if (!j.contains(key)) {
      throw data_format_error(std::string("problem: missing key '") + key + "'");
    }
  }
  ProblemData prob;
  prob.n = index_at(j["n"], "problem.n");
  prob.M = index_at(j["M"], "problem.M");
  prob.A = build_matrix<SpMat>(matrix_from_json(j["A"], "A"));
  prob.E = build_matrix<SpMatRow>(matrix_from_json(j["E"], "E"));
  prob.s = vec_from_json(j["s"], "s");
  if (!j["B_blocks"].is_array()) {
    throw data_format_error("B_blocks: expected an array");
  }
  for (size_t i = 0; i < j["B_blocks"].size(); ++i) {
    prob.B_blocks.push_back(build_matrix<SpMat>(
        matrix_from_json(j["B_blocks"][i], "B_blocks[" + std::to_string(i) + "]")));
  }
  if (!j["r_blocks"].is_array()) {
    throw data_format_error("r_blocks: expected an array");
  }
  for (size_t i = 0; i < j["r_blocks"].size(); ++i) {
    prob.r_blocks.push_back(
        vec_from_json(j["r_blocks"][i], "r_blocks[" + std::to_string(i) + "]"));
  }
  return prob;
}

json problem_to_json(const ProblemData& prob) {
  json blocks = json::array();
  for (const auto& b : prob.B_blocks) blocks.push_back(matrix_to_json(b));
  json r_blocks = json::array();
  for (const auto& r : prob.r_blocks) r_blocks.push_back(vec_to_json(r));
  return json{{"n", prob.n},         {"M", prob.M},
              {"A", matrix_to_json(prob.A)}, {"B_blocks", blocks},
              {"E", matrix_to_json(prob.E)}, {"s", vec_to_json(prob.s)},
              {"r_blocks", r_blocks}};
}

ProblemData load_problem(const std::string& path) {
  return problem_from_json(parse_json(read_text_file(path), path));
}

void save_problem(const ProblemData& prob, const std::string& path) {
  write_text_file(path, problem_to_json(prob).dump(2) + "\n");
}

GraphSpec graph_from_json(const json& j) {
  if (!j.is_object()) throw data_format_error("graph: expected an object");
  reject_unknown_keys(j, {"nodes", "edges", "target"}, "graph");
  if (!j.contains("nodes") || !j["nodes"].is_array()) {
    throw data_format_error("graph: missing nodes array");
  }
  GraphSpec graph;
  for (size_t i = 0; i < j["nodes"].size(); ++i) {
    const json& nj = j["nodes"][i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (!nj.is_object()) throw data_format_error(where + ": expected an object");
    reject_unknown_keys(nj, {"id", "state_cost", "retention", "diffusion"}, where);
    if (!nj.contains("id") || !nj["id"].is_string()) {
      throw data_format_error(where + ": missing string id");
    }
    NodeSpec node;
    node.id = nj["id"].get<std::string>();
    if (nj.contains("state_cost")) {
      node.state_cost = number_at(nj["state_cost"], where + ".state_cost");
    }
    if (nj.contains("retention")) {
      node.retention = number_at(nj["retention"], where + ".retention");
    }
    if (nj.contains("diffusion")) {
      if (!nj["diffusion"].is_array()) {
        throw data_format_error(where + ".diffusion: expected an array");
      }
      for (const json& dj : nj["diffusion"]) {
        reject_unknown_keys(dj, {"target", "rate"}, where + ".diffusion");
        if (!dj.contains("target") || !dj["target"].is_string()) {
          throw data_format_error(where + ".diffusion: missing target id");
        }
        Diffusion d;
        d.target = dj["target"].get<std::string>();
        d.rate = number_at(dj.value("rate", json(0.0)), where + ".diffusion.rate");
        node.diffusion.push_back(std::move(d));
      }
    }
    graph.nodes.push_back(std::move(node));
  }
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) {
      throw data_format_error("graph: edges must be an array");
    }
    for (size_t i = 0; i < j["edges"].size(); ++i) {
      const json& ej = j["edges"][i];
      const std::string where = "edges[" + std::to_string(i) + "]";
      if (!ej.is_object()) throw data_format_error(where + ": expected an object");
      reject_unknown_keys(ej, {"origin", "dest", "transport_cost", "efficiency"},
                          where);
      for (const char* key : {"origin", "dest"}) {
        if (!ej.contains(key) || !ej[key].is_string()) {
          throw data_format_error(where + ": missing string " + std::string(key));
        }
      }
      EdgeSpec edge;
      edge.origin = ej["origin"].get<std::string>();
      edge.dest = ej["dest"].get<std::string>();
      if (ej.contains("transport_cost")) {
        edge.transport_cost =
            number_at(ej["transport_cost"], where + ".transport_cost");
      }
      if (ej.contains("efficiency")) {
        edge.efficiency = number_at(ej["efficiency"], where + ".efficiency");
      }
      graph.edges.push_back(std::move(edge));
    }
  }
  if (j.contains("target")) {
    if (!j["target"].is_string()) {
      throw data_format_error("graph: target must be a node id string");
    }
    graph.target = j["target"].get<std::string>();
  }
  return graph;
}

json graph_to_json(const GraphSpec& graph) {
  json nodes = json::array();
  for (const auto& node : graph.nodes) {
    json dj = json::array();
    for (const auto& d : node.diffusion) {
      dj.push_back(json{{"target", d.target}, {"rate", d.rate}});
    }
    nodes.push_back(json{{"id", node.id},
                         {"state_cost", node.state_cost},
                         {"retention", node.retention},
                         {"diffusion", dj}});
  }
  json edges = json::array();
  for (const auto& edge : graph.edges) {
    edges.push_back(json{{"origin", edge.origin},
                         {"dest", edge.dest},
                         {"transport_cost", edge.transport_cost},
                         {"efficiency", edge.efficiency}});
  }
  json out{{"nodes", nodes}, {"edges", edges}};
  if (graph.target) out["target"] = *graph.target;
  return out;
}

GraphSpec load_graph(const std::string& path) {
  return graph_from_json(parse_json(read_text_file(path), path));
}

void save_graph(const GraphSpec& graph, const std::string& path) {
  write_text_file(path, graph_to_json(graph).dump(2) + "\n");
}

json solve_report_to_json(const SolveReport& report) {
  return json{{"status", to_string(report.status)},
              {"p", vec_to_json(report.p)},
              {"iterations", report.iterations},
              {"residual_trace", report.residual_trace}};
}

std::string solve_trace_csv(const SolveReport& report) {
  if (report.per_coordinate_trace.empty()) {
    throw std::invalid_argument("solve_trace_csv: trace was not recorded");
  }
  const Index n = report.per_coordinate_trace.front().size();
  std::ostringstream os;
  os << "iter";
  for (Index i = 0; i < n; ++i) os << ",p_" << (i + 1);
  os << "\n";
  for (size_t k = 0; k < report.per_coordinate_trace.size(); ++k) {
    os << k;
    const Vec& p = report.per_coordinate_trace[k];
    for (Index i = 0; i < n; ++i) os << "," << format_double(p[i]);
    os << "\n";
  }
  return os.str();
}

std::string trajectory_csv(const Trajectory& traj) {
  if (traj.states.empty()) {
    throw std::invalid_argument("trajectory_csv: empty trajectory");
  }
  const Index n = traj.states.front().size();
  std::ostringstream os;
  os << "t";
  for (Index i = 0; i < n; ++i) os << ",x_" << (i + 1);
  os << ",cost_t,total\n";
  double running = 0.0;
  for (size_t t = 0; t < traj.states.size(); ++t) {
    const double stage = t < traj.stage_costs.size() ? traj.stage_costs[t] : 0.0;
    running += stage;
    os << t;
    for (Index i = 0; i < n; ++i) os << "," << format_double(traj.states[t][i]);
    os << "," << format_double(stage) << "," << format_double(running) << "\n";
  }
  return os.str();
}

json policy_to_json(const ProblemData& prob, const Policy& policy) {
  json choices = json::array();
  for (const auto& choice : policy.choices) {
    if (choice) {
      choices.push_back(*choice);
    } else {
      choices.push_back(nullptr);
    }
  }
  json reduced = json::array();
  for (const auto& rc : policy.reduced_costs) reduced.push_back(vec_to_json(rc));
  const SpMatRow gain = assemble_gain(prob, policy);
  return json{{"choices", choices},
              {"reduced_costs", reduced},
              {"gain", matrix_to_json(gain)}};
}

json validation_report_to_json(const ValidationReport& report) {
  json violations = json::array();
  for (const auto& v : report.violations) {
    const char* kind = nullptr;
    switch (v.kind) {
      case Violation::Kind::Dimension: kind = "dimension"; break;
      case Violation::Kind::Sign: kind = "sign"; break;
      case Violation::Kind::AssumptionB: kind = "assumption_b"; break;
      case Violation::Kind::AssumptionA: kind = "assumption_a"; break;
    }
    violations.push_back(json{{"kind", kind},
                              {"location", v.location},
                              {"description", v.description}});
  }
  return json{{"clean", report.clean()},
              {"structure_ok", report.structure_ok},
              {"assumption_b_ok", report.assumption_b_ok},
              {"assumption_a_ok", report.assumption_a_ok},
              {"violations", violations}};
}

}  // namespace posopt
