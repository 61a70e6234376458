#pragma once

#include <optional>
#include <vector>

#include "posopt/core.hpp"

namespace posopt {

enum class SolveStatus { FixedPoint, Diverged, MaxIterations };

const char* to_string(SolveStatus status);

struct SolveOptions {
  double tol = 1e-9;
  long max_iter = 100000;
  double divergence_cap = 1e12;
  bool record_trace = false;       ///< keep per-iteration cost snapshots
  std::optional<Vec> warm_start;   ///< p0; zeros when absent
  bool unsafe = false;             ///< skip the validation gate
  double validation_slack = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  Vec p;                                 ///< last iterate
  long iterations = 0;
  std::vector<double> residual_trace;    ///< sup-norm increment per iteration
  std::vector<Vec> per_coordinate_trace; ///< [0] = p0, then one entry per iteration
};

/// One application of the Bellman map
///   T(p) = s + A^T p + sum_i min{r_i + B_i^T p, 0} E_i
/// where min{v, 0} is the scalar minimum over the entries of v and zero.
Vec bellman_apply(const ProblemData& prob, const Vec& p);

/// Sup-norm fixed-point defect ||T(p) - p||_inf.
double bellman_residual(const ProblemData& prob, const Vec& p);

/// Iterates p_{k+1} = T(p_k) from p_0 = 0 (or the warm start). Stops with
/// FixedPoint once the increment drops to tol, Diverged once ||p||_inf
/// crosses the cap (the monotone sequence makes this a sound certificate of
/// infinite problem value), MaxIterations otherwise. FixedPoint wins ties.
SolveReport value_iterate(const ProblemData& prob, const SolveOptions& opts = {});

}  // namespace posopt
