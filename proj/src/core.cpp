#include "posopt/core.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace posopt {

namespace {

std::string entry_loc(const std::string& name, Index r, Index c) {
  std::ostringstream os;
  os << name << "(" << r << "," << c << ")";
  return os.str();
}

std::string format_report(const ValidationReport& report) {
  std::ostringstream os;
  os << "instance failed validation (" << report.violations.size()
     << " violation(s))";
  for (const auto& v : report.violations) {
    os << "; " << v.location << ": " << v.description;
  }
  return os.str();
}

}  // namespace

Index ProblemData::input_dim() const {
  Index m = 0;
  for (const auto& b : B_blocks) m += b.cols();
  return m;
}

Index ProblemData::partition_offset(Index i) const {
  Index off = 0;
  for (Index k = 0; k < i; ++k) off += B_blocks[static_cast<size_t>(k)].cols();
  return off;
}

Vec ProblemData::r_concat() const {
  Vec r(input_dim());
  Index off = 0;
  for (const auto& rb : r_blocks) {
    r.segment(off, rb.size()) = rb;
    off += rb.size();
  }
  return r;
}

void ValidationReport::add(Violation::Kind kind, std::string location,
                           std::string description) {
  switch (kind) {
    case Violation::Kind::Dimension:
    case Violation::Kind::Sign:
      structure_ok = false;
      break;
    case Violation::Kind::AssumptionB:
      assumption_b_ok = false;
      break;
    case Violation::Kind::AssumptionA:
      assumption_a_ok = false;
      break;
  }
  violations.push_back({kind, std::move(location), std::move(description)});
}

void ValidationReport::merge(const ValidationReport& other) {
  structure_ok = structure_ok && other.structure_ok;
  assumption_b_ok = assumption_b_ok && other.assumption_b_ok;
  assumption_a_ok = assumption_a_ok && other.assumption_a_ok;
  violations.insert(violations.end(), other.violations.begin(),
                    other.violations.end());
}

validation_error::validation_error(const ValidationReport& report)
    : std::runtime_error(format_report(report)), report_(report) {}

double block_min_or_zero(const ProblemData& prob, Index block_index) {
  if (block_index < 0 || block_index >= static_cast<Index>(prob.B_blocks.size())) {
    throw std::out_of_range("block_min_or_zero: block index out of range");
  }
  const SpMat& block = prob.B_blocks[static_cast<size_t>(block_index)];
  double mn = 0.0;
  for (Index c = 0; c < block.outerSize(); ++c) {
    for (SpMat::InnerIterator it(block, c); it; ++it) {
      if (it.value() < mn) mn = it.value();
    }
  }
  return mn;
}

ValidationReport check_assumption_b(const ProblemData& prob, double slack) {
  ValidationReport report;
  if (prob.M > prob.n) {
    report.add(Violation::Kind::AssumptionB, "B",
               "M > n: block i has no row i to host negative entries");
    return report;
  }
  for (Index i = 0; i < static_cast<Index>(prob.B_blocks.size()); ++i) {
    const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
    for (Index c = 0; c < block.outerSize(); ++c) {
      for (SpMat::InnerIterator it(block, c); it; ++it) {
        if (it.row() != i && it.value() < -slack) {
          std::ostringstream os;
          os << "B[" << i << "]";
          report.add(Violation::Kind::AssumptionB,
                     entry_loc(os.str(), it.row(), it.col()),
                     "negative entry outside row " + std::to_string(i));
        }
      }
    }
  }
  return report;
}

ValidationReport check_assumption_a(const ProblemData& prob, double slack) {
  ValidationReport report;
  if (prob.M > prob.n) {
    report.add(Violation::Kind::AssumptionA, "E",
               "M > n: diag(d) E does not conform with A");
    return report;
  }
  // d padded with zeros beyond M; E padded with zero rows. The bound matrix
  // L = -diag(d) E_pad is nonnegative iff E >= 0 on rows with d_i < 0.
  Vec d = Vec::Zero(prob.n);
  for (Index i = 0; i < static_cast<Index>(prob.B_blocks.size()) && i < prob.n; ++i) {
    d[i] = block_min_or_zero(prob, i);
  }
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(prob.n, prob.n);
  for (Index i = 0; i < prob.E.rows() && i < prob.n; ++i) {
    if (d[i] == 0.0) continue;
    for (SpMatRow::InnerIterator it(prob.E, i); it; ++it) {
      lower(i, it.col()) = -d[i] * it.value();
    }
  }
  Eigen::MatrixXd dense_a = Eigen::MatrixXd(prob.A);
  for (Index r = 0; r < prob.n; ++r) {
    for (Index c = 0; c < prob.n; ++c) {
      if (lower(r, c) < -slack) {
        report.add(Violation::Kind::AssumptionA, entry_loc("-diag(d)E", r, c),
                   "lower-bound matrix has a negative entry");
      }
      if (dense_a(r, c) < lower(r, c) - slack) {
        std::ostringstream os;
        os << "A < -diag(d)E: " << dense_a(r, c) << " < " << lower(r, c);
        report.add(Violation::Kind::AssumptionA, entry_loc("A", r, c), os.str());
      }
    }
  }
  return report;
}

namespace {

ValidationReport check_dimensions(const ProblemData& prob) {
  ValidationReport report;
  if (prob.n <= 0) {
    report.add(Violation::Kind::Dimension, "n", "state dimension must be positive");
  }
  if (prob.M < 0) {
    report.add(Violation::Kind::Dimension, "M", "partition count must be >= 0");
  }
  if (prob.A.rows() != prob.n || prob.A.cols() != prob.n) {
    report.add(Violation::Kind::Dimension, "A", "expected n x n");
  }
  if (static_cast<Index>(prob.B_blocks.size()) != prob.M) {
    report.add(Violation::Kind::Dimension, "B_blocks",
               "expected M = " + std::to_string(prob.M) + " blocks");
  }
  for (Index i = 0; i < static_cast<Index>(prob.B_blocks.size()); ++i) {
    if (prob.B_blocks[static_cast<size_t>(i)].rows() != prob.n) {
      report.add(Violation::Kind::Dimension, "B[" + std::to_string(i) + "]",
                 "expected n rows");
    }
  }
  if (prob.E.rows() != prob.M || prob.E.cols() != prob.n) {
    report.add(Violation::Kind::Dimension, "E", "expected M x n");
  }
  if (prob.s.size() != prob.n) {
    report.add(Violation::Kind::Dimension, "s", "expected length n");
  }
  if (static_cast<Index>(prob.r_blocks.size()) != prob.M) {
    report.add(Violation::Kind::Dimension, "r_blocks",
               "expected M = " + std::to_string(prob.M) + " blocks");
  }
  const size_t blocks = std::min(prob.B_blocks.size(), prob.r_blocks.size());
  for (size_t i = 0; i < blocks; ++i) {
    if (prob.r_blocks[i].size() != prob.B_blocks[i].cols()) {
      report.add(Violation::Kind::Dimension, "r[" + std::to_string(i) + "]",
                 "length does not match columns of B block");
    }
  }
  return report;
}

ValidationReport check_signs(const ProblemData& prob, double slack) {
  ValidationReport report;
  for (Index c = 0; c < prob.A.outerSize(); ++c) {
    for (SpMat::InnerIterator it(prob.A, c); it; ++it) {
      if (it.value() < -slack) {
        report.add(Violation::Kind::Sign, entry_loc("A", it.row(), it.col()),
                   "negative entry");
      }
    }
  }
  for (Index r = 0; r < prob.E.outerSize(); ++r) {
    for (SpMatRow::InnerIterator it(prob.E, r); it; ++it) {
      if (it.value() < -slack) {
        report.add(Violation::Kind::Sign, entry_loc("E", it.row(), it.col()),
                   "negative entry");
      }
    }
  }
  for (Index i = 0; i < prob.s.size(); ++i) {
    if (prob.s[i] < -slack) {
      report.add(Violation::Kind::Sign, "s[" + std::to_string(i) + "]",
                 "negative entry");
    }
  }
  for (size_t b = 0; b < prob.r_blocks.size(); ++b) {
    const Vec& r = prob.r_blocks[b];
    for (Index j = 0; j < r.size(); ++j) {
      if (r[j] < -slack) {
        report.add(Violation::Kind::Sign,
                   "r[" + std::to_string(b) + "][" + std::to_string(j) + "]",
                   "negative entry");
      }
    }
  }
  for (Index i = 0; i < prob.s.size(); ++i) {
    if (!std::isfinite(prob.s[i])) {
      report.add(Violation::Kind::Sign, "s[" + std::to_string(i) + "]",
                 "non-finite entry");
    }
  }
  return report;
}

}  // namespace

ValidationReport validate(const ProblemData& prob, double slack) {
  ValidationReport report = check_dimensions(prob);
  if (!report.structure_ok) {
    report.add(Violation::Kind::AssumptionB, "B",
               "assumption checks skipped: dimensions inconsistent");
    report.add(Violation::Kind::AssumptionA, "A",
               "assumption checks skipped: dimensions inconsistent");
    return report;
  }
  report.merge(check_signs(prob, slack));
  report.merge(check_assumption_b(prob, slack));
  report.merge(check_assumption_a(prob, slack));
  return report;
}

Vec successor(const ProblemData& prob, const Vec& x, const Vec& u) {
  if (x.size() != prob.n || u.size() != prob.input_dim()) {
    throw std::invalid_argument("successor: dimension mismatch");
  }
  Vec next = prob.A * x;
  Index off = 0;
  for (const auto& block : prob.B_blocks) {
    if (block.cols() > 0) {
      next += block * u.segment(off, block.cols());
    }
    off += block.cols();
  }
  return next;
}

bool input_feasible(const ProblemData& prob, const Vec& x, const Vec& u,
                    double tol) {
  if (x.size() != prob.n || u.size() != prob.input_dim()) {
    throw std::invalid_argument("input_feasible: dimension mismatch");
  }
  for (Index j = 0; j < u.size(); ++j) {
    if (u[j] < -tol) return false;
  }
  Index off = 0;
  for (Index i = 0; i < prob.M; ++i) {
    const Index m_i = prob.B_blocks[static_cast<size_t>(i)].cols();
    double cap = 0.0;
    for (SpMatRow::InnerIterator it(prob.E, i); it; ++it) {
      cap += it.value() * x[it.col()];
    }
    if (m_i > 0 && u.segment(off, m_i).sum() > cap + tol) return false;
    off += m_i;
  }
  return true;
}

}  // namespace posopt
