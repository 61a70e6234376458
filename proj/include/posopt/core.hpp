#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace posopt {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;                     // column-major
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Instance of the positive-system optimal control problem
///
///   minimize  sum_t s^T x(t) + r^T u(t)
///   s.t.      x(t+1) = A x(t) + B u(t),  u(t) >= 0,
///             1^T u_i(t) <= E_i^T x(t)   for each partition i,
///
/// with B = [B_1 ... B_M] and r partitioned the same way as u.
/// The struct is a plain data carrier; use validate() to check structure,
/// signs and the two positivity assumptions before solving.
struct ProblemData {
  Index n = 0;                   ///< state dimension
  Index M = 0;                   ///< number of input partitions / constraint rows
  SpMat A;                       ///< n x n, nonnegative
  std::vector<SpMat> B_blocks;   ///< M blocks, block i is n x m_i
  SpMatRow E;                    ///< M x n, nonnegative; row i couples partition i
  Vec s;                         ///< length n, nonnegative state cost
  std::vector<Vec> r_blocks;     ///< M blocks, block i has length m_i, nonnegative

  /// Total input dimension m = sum_i m_i.
  Index input_dim() const;
  /// Column offset of partition i inside the stacked input vector.
  Index partition_offset(Index i) const;
  /// r as one stacked length-m vector.
  Vec r_concat() const;
};

struct Violation {
  enum class Kind { Dimension, Sign, AssumptionB, AssumptionA };
  Kind kind;
  std::string location;     // e.g. "B[1](2,0)", "s[3]", "E"
  std::string description;
};

/// Outcome of the structural checks. `violations` is empty exactly when all
/// three booleans are true; each violation kind maps to one boolean.
struct ValidationReport {
  bool structure_ok = true;     // dimensions and elementwise signs
  bool assumption_b_ok = true;  // negative entries of B_i confined to row i
  bool assumption_a_ok = true;  // A >= -diag(d) E_pad >= 0
  std::vector<Violation> violations;

  bool clean() const { return violations.empty(); }
  void add(Violation::Kind kind, std::string location, std::string description);
  void merge(const ValidationReport& other);
};

/// min{B_i, 0}: smallest entry of block i, or 0 if the block has no negative
/// entry (also 0 for an empty block). Throws std::out_of_range on a bad index.
double block_min_or_zero(const ProblemData& prob, Index block_index);

/// Checks that every negative entry of B_i lies on row i. Requires M <= n;
/// larger M is reported as a structural violation of this assumption.
ValidationReport check_assumption_b(const ProblemData& prob, double slack = 0.0);

/// Checks A >= -diag(d) E_pad >= 0 elementwise, where d_i = block_min_or_zero(i)
/// padded with zeros to length n and E_pad stacks zero rows onto E. Comparisons
/// allow `slack` entrywise for noisy data (default exact).
ValidationReport check_assumption_a(const ProblemData& prob, double slack = 0.0);

/// Full report: dimension consistency, elementwise signs (A, E, s, r >= 0),
/// then both assumptions. Assumption checks are skipped (and marked failed)
/// when dimensions are inconsistent. Deterministic and side-effect free.
ValidationReport validate(const ProblemData& prob, double slack = 0.0);

/// One-step successor A x + B u for a stacked length-m input.
Vec successor(const ProblemData& prob, const Vec& x, const Vec& u);

/// True when u >= 0 and 1^T u_i <= E_i^T x for every partition (within tol).
bool input_feasible(const ProblemData& prob, const Vec& x, const Vec& u,
                    double tol = 1e-12);

/// Thrown by solver entry points when handed an instance whose validation
/// report is not clean and no unsafe override was requested.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const ValidationReport& report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace posopt
