#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posopt/bellman.hpp"
#include "posopt/core.hpp"
#include "posopt/distsim.hpp"
#include "posopt/io.hpp"
#include "posopt/lp.hpp"
#include "posopt/network.hpp"
#include "posopt/policy.hpp"

namespace {

using nlohmann::json;
using namespace posopt;

// Exit codes, kept stable across subcommands:
//   0 success, 2 validation failure, 3 diverged, 4 iteration cap,
//   5 distsim step cap, 64 usage, 65 data format, 66 file problem.
constexpr int kOk = 0;
constexpr int kValidationFailure = 2;
constexpr int kDiverged = 3;
constexpr int kMaxIterations = 4;
constexpr int kStepCap = 5;
constexpr int kUsage = 64;
constexpr int kDataFormat = 65;
constexpr int kFile = 66;

void emit(const json& payload) { std::cout << payload.dump(2) << "\n"; }

struct SolveFlags {
  double tol = 1e-9;
  long max_iter = 100000;
  double cap = 1e12;
  bool unsafe = false;

  SolveOptions to_options() const {
    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    opts.divergence_cap = cap;
    opts.unsafe = unsafe;
    return opts;
  }
};

void add_solve_flags(CLI::App* cmd, SolveFlags& flags) {
  cmd->add_option("--tol", flags.tol, "fixed-point tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-iter", flags.max_iter, "iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--cap", flags.cap, "divergence cap on ||p||_inf")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--unsafe", flags.unsafe,
                "solve even when validation fails (positivity no longer "
                "guaranteed)");
}

int status_code(SolveStatus status) {
  switch (status) {
    case SolveStatus::FixedPoint: return kOk;
    case SolveStatus::Diverged: return kDiverged;
    case SolveStatus::MaxIterations: return kMaxIterations;
  }
  return kOk;
}

int cmd_validate(const std::string& file, double slack) {
  const ProblemData prob = load_problem(file);
  const ValidationReport report = validate(prob, slack);
  emit(validation_report_to_json(report));
  return report.clean() ? kOk : kValidationFailure;
}

int cmd_solve(const std::string& file, const SolveFlags& flags,
              const std::string& trace_path) {
  const ProblemData prob = load_problem(file);
  SolveOptions opts = flags.to_options();
  opts.record_trace = !trace_path.empty();
  const SolveReport report = value_iterate(prob, opts);
  if (!trace_path.empty()) {
    write_text_file(trace_path, solve_trace_csv(report));
  }
  emit(solve_report_to_json(report));
  return status_code(report.status);
}

int cmd_policy(const std::string& file, const SolveFlags& flags,
               double policy_tol, const std::vector<double>& x0_entries,
               std::optional<long> x0_unit, long horizon,
               const std::string& traj_path) {
  const ProblemData prob = load_problem(file);
  const SolveReport solve = value_iterate(prob, flags.to_options());
  if (solve.status != SolveStatus::FixedPoint) {
    std::cerr << "posopt: solve did not reach a fixed point ("
              << to_string(solve.status) << ")\n";
    return status_code(solve.status);
  }
  PolicyOptions popts;
  popts.policy_tol = policy_tol;
  popts.unsafe = flags.unsafe;
  const Policy policy = extract_policy(prob, solve.p, popts);

  json out;
  out["solve"] = solve_report_to_json(solve);
  out["policy"] = policy_to_json(prob, policy);

  const bool simulate = !x0_entries.empty() || x0_unit.has_value();
  if (simulate) {
    Vec x0 = Vec::Zero(prob.n);
    if (x0_unit) {
      if (*x0_unit < 1 || *x0_unit > prob.n) {
        throw data_format_error("--x0-unit index out of range");
      }
      x0[*x0_unit - 1] = 1.0;
    } else {
      if (static_cast<Index>(x0_entries.size()) != prob.n) {
        throw data_format_error("--x0 needs exactly n entries");
      }
      for (Index i = 0; i < prob.n; ++i) x0[i] = x0_entries[static_cast<size_t>(i)];
    }
    const CostCheck check = verify_cost(prob, policy, solve.p, x0, horizon);
    out["simulation"] = json{{"achieved", check.achieved},
                             {"predicted", check.predicted},
                             {"tail", check.tail},
                             {"ok", check.ok},
                             {"horizon", horizon}};
    if (!traj_path.empty()) {
      const Trajectory traj = simulate_closed_loop(prob, policy, x0, horizon);
      write_text_file(traj_path, trajectory_csv(traj));
    }
  }
  emit(out);
  return kOk;
}

int cmd_lp_export(const std::string& file, const std::string& format,
                  bool literal, const std::string& out_path) {
  const ProblemData prob = load_problem(file);
  LpBuildOptions opts;
  opts.literal_printed_form = literal;
  const LpModel model = build_lp(prob, opts);
  const std::string text =
      format == "mps" ? export_mps_text(model) : export_lp_text(model);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
  return kOk;
}

int cmd_build(const std::string& mode, const std::string& graph_file,
              const std::string& out_path, bool allow_asymmetric) {
  const GraphSpec graph = load_graph(graph_file);
  ProblemData prob;
  if (mode == "sp") {
    prob = build_shortest_path(graph);
  } else {
    FlowBuildOptions opts;
    opts.allow_asymmetric = allow_asymmetric;
    prob = build_flow_network(graph, opts);
  }
  if (out_path.empty()) {
    emit(problem_to_json(prob));
  } else {
    save_problem(prob, out_path);
  }
  return kOk;
}

int cmd_distsim(const std::string& file, const std::string& schedule_name,
                std::uint64_t seed, long window, int delay, long steps,
                double observer_tol, const std::string& trace_path,
                const std::string& trace_format, bool unsafe) {
  const ProblemData prob = load_problem(file);
  ScheduleSpec schedule;
  if (schedule_name == "roundrobin") {
    schedule.kind = ScheduleKind::RoundRobin;
  } else if (schedule_name == "uniform") {
    schedule.kind = ScheduleKind::UniformRandom;
  } else {
    schedule.kind = ScheduleKind::FairWindow;
    schedule.window = window > 0 ? window : prob.n;
  }
  schedule.seed = seed;
  schedule.step_limit = steps;

  DistRunOptions opts;
  opts.delay_bound = delay;
  opts.record_wide = !trace_path.empty() && trace_format == "wide";
  opts.unsafe = unsafe;

  DistRun run = make_run(prob, schedule, opts);
  const DistResult result = run_until_converged(run, observer_tol);
  if (!trace_path.empty()) {
    write_text_file(trace_path, trace_format == "wide"
                                    ? export_trace_wide(run)
                                    : export_trace_long(run));
  }
  json out{{"converged", result.converged},
           {"steps", result.steps},
           {"p_hat", std::vector<double>(result.p_hat.begin(),
                                         result.p_hat.end())}};
  emit(out);
  return result.converged ? kOk : kStepCap;
}

int cmd_gen(Index nodes, std::uint64_t seed, const CoolingGenOptions& opts,
            const std::string& out_path) {
  const GraphSpec graph = generate_cooling_instance(nodes, seed, opts);
  if (out_path.empty()) {
    emit(graph_to_json(graph));
  } else {
    save_graph(graph, out_path);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "posopt - optimal control of positive linear systems with coupled "
      "input constraints"};
  app.require_subcommand(1);

  // validate
  std::string v_file;
  double v_slack = 0.0;
  auto* validate_cmd =
      app.add_subcommand("validate", "check structure and assumptions");
  validate_cmd->add_option("problem", v_file, "problem JSON file")->required();
  validate_cmd->add_option("--slack", v_slack, "comparison slack")
      ->check(CLI::NonNegativeNumber);

  // solve
  std::string s_file, s_trace;
  SolveFlags s_flags;
  auto* solve_cmd = app.add_subcommand("solve", "run value iteration");
  solve_cmd->add_option("problem", s_file, "problem JSON file")->required();
  add_solve_flags(solve_cmd, s_flags);
  solve_cmd->add_option("--trace", s_trace, "write per-coordinate CSV trace");

  // policy
  std::string p_file, p_traj;
  SolveFlags p_flags;
  double p_policy_tol = 1e-6;
  std::vector<double> p_x0;
  std::optional<long> p_x0_unit;
  long p_horizon = 10;
  auto* policy_cmd =
      app.add_subcommand("policy", "extract the optimal feedback, optionally "
                                   "simulating the closed loop");
  policy_cmd->add_option("problem", p_file, "problem JSON file")->required();
  add_solve_flags(policy_cmd, p_flags);
  policy_cmd->add_option("--policy-tol", p_policy_tol,
                         "max residual accepted for extraction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  policy_cmd->add_option("--x0", p_x0, "initial state, comma separated")
      ->delimiter(',');
  long p_x0_unit_raw = 0;
  auto* unit_opt = policy_cmd->add_option(
      "--x0-unit", p_x0_unit_raw, "initial state e_k (1-based index)");
  policy_cmd->add_option("--horizon", p_horizon, "simulation steps T")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  policy_cmd->add_option("--traj", p_traj, "write trajectory CSV");

  // lp-export
  std::string l_file, l_format = "lp", l_out;
  bool l_literal = false;
  auto* lp_cmd = app.add_subcommand("lp-export",
                                    "write the Theorem-1(iii) linear program");
  lp_cmd->add_option("problem", l_file, "problem JSON file")->required();
  lp_cmd->add_option("--format", l_format, "lp or mps")
      ->check(CLI::IsMember({"lp", "mps"}))
      ->capture_default_str();
  lp_cmd->add_flag("--literal", l_literal,
                   "emit the reduced-cost rows exactly as printed in the "
                   "theorem statement instead of the proof-consistent form");
  lp_cmd->add_option("-o,--out", l_out, "output path (stdout when absent)");

  // build
  std::string b_mode, b_graph, b_out;
  bool b_allow_asym = false;
  auto* build_cmd =
      app.add_subcommand("build", "synthesize a problem from a graph file");
  build_cmd->add_option("mode", b_mode, "sp (shortest path) or flow")
      ->required()
      ->check(CLI::IsMember({"sp", "flow"}));
  build_cmd->add_option("graph", b_graph, "graph JSON file")->required();
  build_cmd->add_option("-o,--out", b_out, "output path (stdout when absent)");
  build_cmd->add_flag("--allow-asymmetric", b_allow_asym,
                      "accept flow graphs whose pipes are not symmetric");

  // distsim
  std::string d_file, d_schedule = "roundrobin", d_trace, d_trace_format = "long";
  std::uint64_t d_seed = 0;
  long d_window = 0, d_steps = 1000000;
  int d_delay = 0;
  double d_observer_tol = 1e-9;
  bool d_unsafe = false;
  auto* dist_cmd = app.add_subcommand(
      "distsim", "simulate asynchronous distributed value iteration");
  dist_cmd->add_option("problem", d_file, "problem JSON file")->required();
  dist_cmd->add_option("--schedule", d_schedule,
                       "roundrobin, uniform or fairwindow")
      ->check(CLI::IsMember({"roundrobin", "uniform", "fairwindow"}))
      ->capture_default_str();
  dist_cmd->add_option("--seed", d_seed, "schedule seed")->capture_default_str();
  dist_cmd->add_option("--window", d_window, "fairwindow length (>= n)");
  dist_cmd->add_option("--delay", d_delay, "staleness bound D")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  dist_cmd->add_option("--steps", d_steps, "step limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dist_cmd->add_option("--observer-tol", d_observer_tol,
                       "observer residual tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dist_cmd->add_option("--trace", d_trace, "write trace CSV");
  dist_cmd->add_option("--trace-format", d_trace_format, "long or wide")
      ->check(CLI::IsMember({"long", "wide"}))
      ->capture_default_str();
  dist_cmd->add_flag("--unsafe", d_unsafe, "skip the validation gate");

  // gen
  long g_nodes = 26;
  std::uint64_t g_seed = 1;
  std::string g_out;
  CoolingGenOptions g_opts;
  auto* gen_cmd = app.add_subcommand(
      "gen", "generate a random cooling-network graph");
  gen_cmd->add_option("--nodes", g_nodes, "number of nodes")
      ->check(CLI::Range(2l, 100000l))
      ->capture_default_str();
  gen_cmd->add_option("--seed", g_seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--cost-min", g_opts.cost_min, "")->capture_default_str();
  gen_cmd->add_option("--cost-max", g_opts.cost_max, "")->capture_default_str();
  gen_cmd->add_option("--eff-min", g_opts.efficiency_min, "")
      ->capture_default_str();
  gen_cmd->add_option("--eff-max", g_opts.efficiency_max, "")
      ->capture_default_str();
  gen_cmd->add_option("-o,--out", g_out, "output path (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand(validate_cmd)) {
      return cmd_validate(v_file, v_slack);
    }
    if (app.got_subcommand(solve_cmd)) {
      return cmd_solve(s_file, s_flags, s_trace);
    }
    if (app.got_subcommand(policy_cmd)) {
      if (unit_opt->count() > 0) p_x0_unit = p_x0_unit_raw;
      return cmd_policy(p_file, p_flags, p_policy_tol, p_x0, p_x0_unit,
                        p_horizon, p_traj);
    }
    if (app.got_subcommand(lp_cmd)) {
      return cmd_lp_export(l_file, l_format, l_literal, l_out);
    }
    if (app.got_subcommand(build_cmd)) {
      return cmd_build(b_mode, b_graph, b_out, b_allow_asym);
    }
    if (app.got_subcommand(dist_cmd)) {
      return cmd_distsim(d_file, d_schedule, d_seed, d_window, d_delay, d_steps,
                         d_observer_tol, d_trace, d_trace_format, d_unsafe);
    }
    if (app.got_subcommand(gen_cmd)) {
      return cmd_gen(g_nodes, g_seed, g_opts, g_out);
    }
  } catch (const validation_error& e) {
    std::cerr << "posopt: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const file_error& e) {
    std::cerr << "posopt: " << e.what() << "\n";
    return kFile;
  } catch (const std::exception& e) {
    std::cerr << "posopt: " << e.what() << "\n";
    return kDataFormat;
  }
  return kUsage;
}
