#include "posopt/bellman.hpp"

#include <stdexcept>

namespace posopt {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::FixedPoint: return "FixedPoint";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

Vec bellman_apply(const ProblemData& prob, const Vec& p) {
  if (p.size() != prob.n) {
    throw std::invalid_argument("bellman_apply: p has wrong length");
  }
  Vec out = prob.s + prob.A.transpose() * p;
  for (Index i = 0; i < prob.M; ++i) {
    const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
    if (block.cols() == 0) continue;
    Vec reduced = prob.r_blocks[static_cast<size_t>(i)] + block.transpose() * p;
    const double q = std::min(reduced.minCoeff(), 0.0);
    if (q < 0.0) {
      for (SpMatRow::InnerIterator it(prob.E, i); it; ++it) {
        out[it.col()] += q * it.value();
      }
    }
  }
  return out;
}

double bellman_residual(const ProblemData& prob, const Vec& p) {
  return (bellman_apply(prob, p) - p).lpNorm<Eigen::Infinity>();
}

SolveReport value_iterate(const ProblemData& prob, const SolveOptions& opts) {
  if (!(opts.tol > 0.0)) {
    throw std::invalid_argument("value_iterate: tol must be positive");
  }
  if (opts.max_iter < 1) {
    throw std::invalid_argument("value_iterate: max_iter must be >= 1");
  }
  if (!(opts.divergence_cap > 0.0)) {
    throw std::invalid_argument("value_iterate: divergence_cap must be positive");
  }
  if (!opts.unsafe) {
    ValidationReport report = validate(prob, opts.validation_slack);
    if (!report.clean()) throw validation_error(report);
  }

  SolveReport report;
  Vec p = opts.warm_start ? *opts.warm_start : Vec(Vec::Zero(prob.n));
  if (p.size() != prob.n) {
    throw std::invalid_argument("value_iterate: warm start has wrong length");
  }
  if (opts.record_trace) report.per_coordinate_trace.push_back(p);

  for (long k = 1; k <= opts.max_iter; ++k) {
    Vec next = bellman_apply(prob, p);
    const double residual = (next - p).lpNorm<Eigen::Infinity>();
    report.residual_trace.push_back(residual);
    p = std::move(next);
    if (opts.record_trace) report.per_coordinate_trace.push_back(p);
    report.iterations = k;
    if (residual <= opts.tol) {
      report.status = SolveStatus::FixedPoint;
      report.p = std::move(p);
      return report;
    }
    if (p.lpNorm<Eigen::Infinity>() > opts.divergence_cap) {
      report.status = SolveStatus::Diverged;
      report.p = std::move(p);
      return report;
    }
  }
  report.status = SolveStatus::MaxIterations;
  report.p = std::move(p);
  return report;
}

}  // namespace posopt
