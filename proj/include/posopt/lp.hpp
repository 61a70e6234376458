#pragma once

#include <string>
#include <vector>

#include "posopt/core.hpp"

namespace posopt {

struct LpTerm {
  Index var;     ///< 0..n-1 are p_1..p_n, n..n+M-1 are z_1..z_M
  double coeff;
};

/// One `<=` constraint row.
struct LpRow {
  std::string name;
  std::vector<LpTerm> terms;  ///< sorted by variable index, zeros omitted
  double rhs = 0.0;
};

/// The program of Theorem 1(iii): maximize 1^T p over p >= 0, z >= 0 subject
/// to n Bellman rows (I - A^T) p + sum_i z_i E_i <= s followed by one
/// reduced-cost row per input column. The reduced-cost rows use the
/// proof-consistent orientation -B_ij^T p - z_i <= r_ij so that
/// z_i = -min{r_i + B_i^T p, 0} at a fixed point; `literal_printed_form`
/// switches to the orientation printed in the theorem statement
/// (B_ij^T p - z_i <= -r_ij) for comparison.
struct LpModel {
  Index n = 0;
  Index M = 0;
  std::vector<std::string> var_names;  ///< p_1..p_n then z_1..z_M
  std::vector<LpRow> rows;             ///< bell_1..bell_n then red_i_j
  Index num_vars() const { return n + M; }
};

struct LpBuildOptions {
  bool literal_printed_form = false;
};

LpModel build_lp(const ProblemData& prob, const LpBuildOptions& opts = {});

/// CPLEX LP text format; deterministic (variables by index, Bellman rows
/// first, bounds section declaring every variable >= 0).
std::string export_lp_text(const LpModel& model);

/// MPS text with fixed-width fields and an OBJSENSE MAX section; variable
/// lower bounds of zero are the MPS default and are not repeated.
std::string export_mps_text(const LpModel& model);

struct FeasibilityCheck {
  bool feasible = false;
  double max_violation = 0.0;
  std::string worst_row;
};

/// Evaluates all rows and the p, z >= 0 bounds at the given point.
FeasibilityCheck check_feasible(const LpModel& model, const Vec& p,
                                const Vec& z, double tol = 1e-8);

struct Certificate {
  bool feasible = false;
  Vec z;                            ///< -min{r_i + B_i^T p, 0}
  std::vector<Index> tight_rows;    ///< Bellman rows holding with equality
  bool all_bellman_tight = false;
  double max_violation = 0.0;
};

/// Builds the canonical multiplier z from p and checks feasibility plus
/// tightness of every Bellman row; all rows tight together with feasibility
/// certifies that p solves the fixed-point equation.
Certificate certify_optimal(const ProblemData& prob, const Vec& p,
                            double tol = 1e-8);

}  // namespace posopt
