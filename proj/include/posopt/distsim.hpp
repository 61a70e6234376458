#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "posopt/core.hpp"
#include "posopt/rng.hpp"

namespace posopt {

enum class ScheduleKind { RoundRobin, UniformRandom, FairWindow };

/// How agents are sampled. RoundRobin cycles 1..n in fixed order.
/// UniformRandom draws i.i.d. with replacement. FairWindow is randomized but
/// guarantees every agent appears in every window of `window` consecutive
/// steps (window >= n), the finite-run surrogate of "updated infinitely
/// often".
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::RoundRobin;
  std::uint64_t seed = 0;
  Index window = 0;            ///< FairWindow only
  long step_limit = 1000000;
};

/// Everything agent i stores: its scalar estimates, the column entries of A
/// and E it owns, its B block and costs, and the three neighbor sets.
struct AgentState {
  Index id = 0;
  double p_hat = 0.0;
  double q_hat = 0.0;

  double s_i = 0.0;
  double e_ii = 0.0;
  Vec r_i;
  std::vector<std::pair<Index, double>> a_col;  ///< (j, A_ji), diagonal included
  std::vector<std::pair<Index, double>> e_col;  ///< (j, E_ji), j != i
  std::vector<std::vector<std::pair<Index, double>>> b_cols;  ///< per action

  std::vector<Index> neighbors_A;  ///< {j != i : A_ji != 0}
  std::vector<Index> neighbors_E;  ///< {j != i : E_ji != 0}
  std::vector<Index> neighbors_B;  ///< {j != i : (B_i B_i^T)_ij != 0}
  std::vector<Index> p_read_set;   ///< {i} plus A- and B-neighbors, sorted

  std::optional<Index> last_argmin;  ///< recorded only when enabled
};

/// Splits a validated instance with M = n into per-agent state.
std::vector<AgentState> build_agents(const ProblemData& prob);

struct DistRunOptions {
  int delay_bound = 0;        ///< D: reads may be up to D steps stale
  bool record_wide = false;   ///< keep a full estimate snapshot per step
  bool record_argmin = false; ///< agents remember their minimizing action
  bool unsafe = false;
  double validation_slack = 0.0;
};

struct TraceEntry {
  long step;       ///< 1-based update counter
  Index agent;
  double p_hat;    ///< value written by the update
};

struct DistRun {
  const ProblemData* prob = nullptr;
  std::vector<AgentState> agents;
  ScheduleSpec schedule;
  DistRunOptions opts;
  long step_count = 0;
  std::vector<TraceEntry> trace;
  std::vector<Vec> wide_trace;   ///< filled when record_wide

  // Mailbox history: one (step, p, q) record per performed update, so stale
  // reads can be resolved exactly.
  std::vector<std::vector<std::tuple<long, double, double>>> history;
  DetRng sched_rng{0};
  DetRng delay_rng{0};
  std::vector<Index> fair_order;

  /// Test hook: when set, every neighbor read is appended as (reader, source).
  std::vector<std::pair<Index, Index>>* read_audit = nullptr;
};

DistRun make_run(const ProblemData& prob, const ScheduleSpec& schedule,
                 const DistRunOptions& opts = {});

/// Draws the next agent according to the schedule (advances its RNG).
Index next_agent(DistRun& run);

/// One Algorithm-1 update of agent i: receive neighbor estimates (through the
/// delay model), recompute q_hat as min{r_i + B_i^T p_hat, 0} with unknown
/// coordinates entering as zero, then rewrite p_hat.
void agent_update(DistRun& run, Index i);

/// All agents' p estimates as one vector.
Vec assemble_estimates(const DistRun& run);

struct DistResult {
  bool converged = false;
  long steps = 0;
  Vec p_hat;
};

/// Steps the schedule until an out-of-band observer (which may read every
/// agent, unlike the agents themselves) certifies that the assembled estimate
/// has Bellman residual at most observer_tol, or the step limit is reached.
DistResult run_until_converged(DistRun& run, double observer_tol);

/// CSV `step,agent,p_hat`, one row per update.
std::string export_trace_long(const DistRun& run);

/// CSV `step,p_1,...,p_n`, one snapshot row per update (needs record_wide).
std::string export_trace_wide(const DistRun& run);

}  // namespace posopt
