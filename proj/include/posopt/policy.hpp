#pragma once

#include <optional>
#include <vector>

#include "posopt/core.hpp"

namespace posopt {

/// Stationary feedback extracted from a Bellman fixed point p. For each
/// partition i, `choices[i]` holds the index of the minimal entry of
/// r_i + B_i^T p when that entry is negative, and is empty otherwise
/// (no action). Ties break toward the lowest index.
struct Policy {
  std::vector<std::optional<Index>> choices;
  std::vector<Vec> reduced_costs;   ///< r_i + B_i^T p, kept for diagnostics
};

struct PolicyOptions {
  double policy_tol = 1e-6;  ///< max Bellman residual accepted for p
  double eps_neg = 1e-9;     ///< entries above -eps_neg count as nonnegative
  bool unsafe = false;
  double validation_slack = 0.0;
};

Policy extract_policy(const ProblemData& prob, const Vec& p,
                      const PolicyOptions& opts = {});

/// The m x n gain K with u = K x: row (offset of partition i) + j equals
/// E_i^T when partition i selected action j, every other row is zero.
SpMatRow assemble_gain(const ProblemData& prob, const Policy& policy);

struct Trajectory {
  std::vector<Vec> states;        ///< length T+1
  std::vector<Vec> inputs;        ///< length T, stacked m-vectors
  std::vector<double> stage_costs;
  double total_cost = 0.0;
};

/// Runs x(t+1) = A x(t) + B u(t) with u(t) = K x(t) for T steps, checking
/// input feasibility and state nonnegativity at every step (violations throw,
/// signalling an invalid instance or an unsafe override gone wrong).
Trajectory simulate_closed_loop(const ProblemData& prob, const Policy& policy,
                                const Vec& x0, long T);

struct CostCheck {
  double achieved = 0.0;   ///< simulated cost over T steps
  double predicted = 0.0;  ///< p^T x0
  double tail = 0.0;       ///< p^T x(T), the remaining-cost bound
  bool ok = false;
};

/// Compares the simulated closed-loop cost against the predicted value
/// p^T x0; ok iff |achieved - predicted| <= tail_tol + p^T x(T).
CostCheck verify_cost(const ProblemData& prob, const Policy& policy,
                      const Vec& p, const Vec& x0, long T,
                      double tail_tol = 1e-9);

}  // namespace posopt
