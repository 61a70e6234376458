#include "posopt/distsim.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "posopt/bellman.hpp"
#include "posopt/io.hpp"

namespace posopt {

std::vector<AgentState> build_agents(const ProblemData& prob) {
  if (prob.M != prob.n) {
    throw std::invalid_argument(
        "build_agents: one agent per state requires M = n");
  }
  const size_t n = static_cast<size_t>(prob.n);
  std::vector<AgentState> agents(n);

  // Column views of E (stored row-major) in one pass.
  std::vector<std::vector<std::pair<Index, double>>> e_cols(n);
  for (Index r = 0; r < prob.E.rows(); ++r) {
    for (SpMatRow::InnerIterator it(prob.E, r); it; ++it) {
      if (it.value() != 0.0) {
        e_cols[static_cast<size_t>(it.col())].emplace_back(r, it.value());
      }
    }
  }

  for (Index i = 0; i < prob.n; ++i) {
    AgentState& agent = agents[static_cast<size_t>(i)];
    agent.id = i;
    agent.s_i = prob.s[i];
    agent.r_i = prob.r_blocks[static_cast<size_t>(i)];

    for (SpMat::InnerIterator it(prob.A, i); it; ++it) {
      if (it.value() == 0.0) continue;
      agent.a_col.emplace_back(it.row(), it.value());
      if (it.row() != i) agent.neighbors_A.push_back(it.row());
    }
    for (const auto& [j, val] : e_cols[static_cast<size_t>(i)]) {
      if (j == i) {
        agent.e_ii = val;
      } else {
        agent.e_col.emplace_back(j, val);
        agent.neighbors_E.push_back(j);
      }
    }

    const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
    agent.b_cols.resize(static_cast<size_t>(block.cols()));
    Vec w = Vec::Zero(prob.n);  // row i of B_i B_i^T
    for (Index c = 0; c < block.cols(); ++c) {
      double row_i_value = 0.0;
      for (SpMat::InnerIterator it(block, c); it; ++it) {
        agent.b_cols[static_cast<size_t>(c)].emplace_back(it.row(), it.value());
        if (it.row() == i) row_i_value = it.value();
      }
      if (row_i_value != 0.0) {
        for (SpMat::InnerIterator it(block, c); it; ++it) {
          w[it.row()] += row_i_value * it.value();
        }
      }
    }
    for (Index j = 0; j < prob.n; ++j) {
      if (j != i && w[j] != 0.0) agent.neighbors_B.push_back(j);
    }

    agent.p_read_set = agent.neighbors_A;
    agent.p_read_set.insert(agent.p_read_set.end(), agent.neighbors_B.begin(),
                            agent.neighbors_B.end());
    agent.p_read_set.push_back(i);
    std::sort(agent.p_read_set.begin(), agent.p_read_set.end());
    agent.p_read_set.erase(
        std::unique(agent.p_read_set.begin(), agent.p_read_set.end()),
        agent.p_read_set.end());
  }
  return agents;
}

DistRun make_run(const ProblemData& prob, const ScheduleSpec& schedule,
                 const DistRunOptions& opts) {
  if (!opts.unsafe) {
    ValidationReport report = validate(prob, opts.validation_slack);
    if (!report.clean()) throw validation_error(report);
  }
  if (schedule.kind == ScheduleKind::FairWindow && schedule.window < prob.n) {
    throw std::invalid_argument("make_run: FairWindow needs window >= n");
  }
  if (schedule.step_limit < 0) {
    throw std::invalid_argument("make_run: step_limit must be >= 0");
  }
  if (opts.delay_bound < 0) {
    throw std::invalid_argument("make_run: delay bound must be >= 0");
  }
  DistRun run;
  run.prob = &prob;
  run.agents = build_agents(prob);
  run.schedule = schedule;
  run.opts = opts;
  run.history.resize(run.agents.size());
  run.sched_rng = DetRng(derive_seed(schedule.seed, 0));
  run.delay_rng = DetRng(derive_seed(schedule.seed, 1));
  if (schedule.kind == ScheduleKind::FairWindow) {
    DetRng perm_rng(derive_seed(schedule.seed, 2));
    run.fair_order.resize(static_cast<size_t>(prob.n));
    for (Index i = 0; i < prob.n; ++i) {
      run.fair_order[static_cast<size_t>(i)] = i;
    }
    for (size_t i = run.fair_order.size() - 1; i > 0; --i) {
      std::swap(run.fair_order[i],
                run.fair_order[static_cast<size_t>(perm_rng.below(i + 1))]);
    }
  }
  return run;
}

Index next_agent(DistRun& run) {
  const Index n = static_cast<Index>(run.agents.size());
  switch (run.schedule.kind) {
    case ScheduleKind::RoundRobin:
      return static_cast<Index>(run.step_count % n);
    case ScheduleKind::UniformRandom:
      return static_cast<Index>(
          run.sched_rng.below(static_cast<std::uint64_t>(n)));
    case ScheduleKind::FairWindow: {
      // A round-robin backbone every g-th step keeps any window of length
      // `window` covering all n agents; the steps in between are uniform.
      const long g = std::max<long>(1, run.schedule.window / n);
      if (run.step_count % g == 0) {
        const size_t pos = static_cast<size_t>((run.step_count / g) %
                                               static_cast<long>(n));
        return run.fair_order[pos];
      }
      return static_cast<Index>(
          run.sched_rng.below(static_cast<std::uint64_t>(n)));
    }
  }
  return 0;
}

namespace {

/// Published (p, q) of agent j as of the end of step `as_of` (1-based step
/// counter; 0 means the initial all-zero state).
std::pair<double, double> value_as_of(const DistRun& run, Index j, long as_of) {
  const auto& hist = run.history[static_cast<size_t>(j)];
  std::pair<double, double> value{0.0, 0.0};
  // Histories are short per agent; a linear scan from the back is fine and
  // exact (entries are in increasing step order).
  for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
    if (std::get<0>(*it) <= as_of) {
      value = {std::get<1>(*it), std::get<2>(*it)};
      break;
    }
  }
  return value;
}

}  // namespace

void agent_update(DistRun& run, Index i) {
  if (i < 0 || i >= static_cast<Index>(run.agents.size())) {
    throw std::invalid_argument("agent_update: agent id out of range");
  }
  AgentState& agent = run.agents[static_cast<size_t>(i)];
  const long step = run.step_count + 1;  // 1-based counter of this update

  // Receive p from N_A ∪ N_B and q from N_E, each through the delay model.
  // A zero delay delivers the sender's current value.
  const auto draw_delay = [&run]() {
    return run.opts.delay_bound == 0
               ? 0l
               : static_cast<long>(run.delay_rng.below(
                     static_cast<std::uint64_t>(run.opts.delay_bound) + 1));
  };
  Vec p_local = Vec::Zero(run.prob->n);
  p_local[i] = agent.p_hat;
  for (Index j : agent.p_read_set) {
    if (j == i) continue;
    const long delay = draw_delay();
    if (run.read_audit) run.read_audit->emplace_back(i, j);
    p_local[j] = delay == 0 ? run.agents[static_cast<size_t>(j)].p_hat
                            : value_as_of(run, j, step - 1 - delay).first;
  }
  std::vector<double> q_neighbors(agent.e_col.size());
  for (size_t k = 0; k < agent.e_col.size(); ++k) {
    const Index j = agent.e_col[k].first;
    const long delay = draw_delay();
    if (run.read_audit) run.read_audit->emplace_back(i, j);
    q_neighbors[k] = delay == 0
                         ? run.agents[static_cast<size_t>(j)].q_hat
                         : value_as_of(run, j, step - 1 - delay).second;
  }

  // Step 6: q_hat <- min{r_i + B_i^T p_hat, 0}. Rows outside the read set
  // enter multiplied by zero (p_local is zero there by construction).
  double q_new = 0.0;
  std::optional<Index> argmin;
  const auto in_read_set = [&agent](Index j) {
    return std::binary_search(agent.p_read_set.begin(), agent.p_read_set.end(), j);
  };
  for (size_t c = 0; c < agent.b_cols.size(); ++c) {
    double reduced = agent.r_i[static_cast<Index>(c)];
    for (const auto& [j, val] : agent.b_cols[c]) {
      if (in_read_set(j)) reduced += val * p_local[j];
    }
    if (reduced < q_new) {
      q_new = reduced;
      argmin = static_cast<Index>(c);
    }
  }

  // Step 7: p_hat <- s_i + A_i^T p_hat + q_hat E_ii + sum_{j in N_E} q_j E_ji.
  double p_new = agent.s_i;
  for (const auto& [j, val] : agent.a_col) p_new += val * p_local[j];
  p_new += q_new * agent.e_ii;
  for (size_t k = 0; k < agent.e_col.size(); ++k) {
    p_new += q_neighbors[k] * agent.e_col[k].second;
  }

  agent.p_hat = p_new;
  agent.q_hat = q_new;
  if (run.opts.record_argmin) agent.last_argmin = argmin;
  run.history[static_cast<size_t>(i)].emplace_back(step, p_new, q_new);
  run.trace.push_back({step, i, p_new});
  run.step_count = step;
  if (run.opts.record_wide) run.wide_trace.push_back(assemble_estimates(run));
}

Vec assemble_estimates(const DistRun& run) {
  Vec p(static_cast<Index>(run.agents.size()));
  for (size_t i = 0; i < run.agents.size(); ++i) {
    p[static_cast<Index>(i)] = run.agents[i].p_hat;
  }
  return p;
}

DistResult run_until_converged(DistRun& run, double observer_tol) {
  if (!(observer_tol > 0.0)) {
    throw std::invalid_argument("run_until_converged: observer_tol must be > 0");
  }
  DistResult result;
  while (true) {
    if (bellman_residual(*run.prob, assemble_estimates(run)) <= observer_tol) {
      result.converged = true;
      break;
    }
    if (run.step_count >= run.schedule.step_limit) break;
    agent_update(run, next_agent(run));
  }
  result.steps = run.step_count;
  result.p_hat = assemble_estimates(run);
  return result;
}

std::string export_trace_long(const DistRun& run) {
  std::ostringstream os;
  os << "step,agent,p_hat\n";
  for (const auto& entry : run.trace) {
    os << entry.step << "," << entry.agent << ","
       << format_double(entry.p_hat) << "\n";
  }
  return os.str();
}

std::string export_trace_wide(const DistRun& run) {
  if (!run.opts.record_wide && run.step_count > 0) {
    throw std::invalid_argument("export_trace_wide: wide trace not recorded");
  }
  const Index n = static_cast<Index>(run.agents.size());
  std::ostringstream os;
  os << "step";
  for (Index i = 0; i < n; ++i) os << ",p_" << (i + 1);
  os << "\n";
  for (size_t k = 0; k < run.wide_trace.size(); ++k) {
    os << (k + 1);
    for (Index i = 0; i < n; ++i) {
      os << "," << format_double(run.wide_trace[k][i]);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace posopt
