#include "posopt/policy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "posopt/bellman.hpp"

namespace posopt {

Policy extract_policy(const ProblemData& prob, const Vec& p,
                      const PolicyOptions& opts) {
  if (p.size() != prob.n) {
    throw std::invalid_argument("extract_policy: p has wrong length");
  }
  if (!opts.unsafe) {
    ValidationReport report = validate(prob, opts.validation_slack);
    if (!report.clean()) throw validation_error(report);
  }
  const double residual = bellman_residual(prob, p);
  if (residual > opts.policy_tol) {
    std::ostringstream os;
    os << "extract_policy: p is not a fixed point (residual " << residual
       << " > " << opts.policy_tol << ")";
    throw std::invalid_argument(os.str());
  }

  Policy policy;
  policy.choices.resize(static_cast<size_t>(prob.M));
  policy.reduced_costs.resize(static_cast<size_t>(prob.M));
  for (Index i = 0; i < prob.M; ++i) {
    const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
    Vec reduced(block.cols());
    if (block.cols() > 0) {
      reduced = prob.r_blocks[static_cast<size_t>(i)] + block.transpose() * p;
    }
    policy.reduced_costs[static_cast<size_t>(i)] = reduced;
    std::optional<Index> choice;
    double best = -opts.eps_neg;  // only strictly improving actions qualify
    for (Index j = 0; j < reduced.size(); ++j) {
      if (reduced[j] < best) {
        best = reduced[j];
        choice = j;
      }
    }
    policy.choices[static_cast<size_t>(i)] = choice;
  }
  return policy;
}

SpMatRow assemble_gain(const ProblemData& prob, const Policy& policy) {
  if (static_cast<Index>(policy.choices.size()) != prob.M) {
    throw std::invalid_argument("assemble_gain: policy/partition mismatch");
  }
  const Index m = prob.input_dim();
  std::vector<Eigen::Triplet<double>> triplets;
  Index off = 0;
  for (Index i = 0; i < prob.M; ++i) {
    const auto& choice = policy.choices[static_cast<size_t>(i)];
    if (choice) {
      if (*choice < 0 || *choice >= prob.B_blocks[static_cast<size_t>(i)].cols()) {
        throw std::invalid_argument("assemble_gain: selected index out of range");
      }
      for (SpMatRow::InnerIterator it(prob.E, i); it; ++it) {
        triplets.emplace_back(off + *choice, it.col(), it.value());
      }
    }
    off += prob.B_blocks[static_cast<size_t>(i)].cols();
  }
  SpMatRow gain(m, prob.n);
  gain.setFromTriplets(triplets.begin(), triplets.end());
  return gain;
}

Trajectory simulate_closed_loop(const ProblemData& prob, const Policy& policy,
                                const Vec& x0, long T) {
  if (x0.size() != prob.n) {
    throw std::invalid_argument("simulate_closed_loop: x0 has wrong length");
  }
  if (T < 0) {
    throw std::invalid_argument("simulate_closed_loop: T must be >= 0");
  }
  for (Index i = 0; i < x0.size(); ++i) {
    if (x0[i] < 0.0) {
      throw std::invalid_argument("simulate_closed_loop: x0 must be nonnegative");
    }
  }
  const SpMatRow gain = assemble_gain(prob, policy);
  const Vec r = prob.r_concat();

  Trajectory traj;
  traj.states.reserve(static_cast<size_t>(T) + 1);
  traj.states.push_back(x0);
  Vec x = x0;
  for (long t = 0; t < T; ++t) {
    Vec u = gain * x;
    const double feas_tol = 1e-9 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
    if (!input_feasible(prob, x, u, feas_tol)) {
      throw std::runtime_error(
          "simulate_closed_loop: infeasible input at step " + std::to_string(t));
    }
    const double stage = prob.s.dot(x) + r.dot(u);
    Vec next = successor(prob, x, u);
    const double neg_tol = 1e-9 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
    for (Index i = 0; i < next.size(); ++i) {
      if (next[i] < -neg_tol) {
        throw std::runtime_error(
            "simulate_closed_loop: state went negative at step " +
            std::to_string(t + 1));
      }
      if (next[i] < 0.0) next[i] = 0.0;  // rounding residue only
    }
    traj.inputs.push_back(std::move(u));
    traj.stage_costs.push_back(stage);
    traj.total_cost += stage;
    x = std::move(next);
    traj.states.push_back(x);
  }
  return traj;
}

CostCheck verify_cost(const ProblemData& prob, const Policy& policy,
                      const Vec& p, const Vec& x0, long T, double tail_tol) {
  Trajectory traj = simulate_closed_loop(prob, policy, x0, T);
  CostCheck check;
  check.achieved = traj.total_cost;
  check.predicted = p.dot(x0);
  check.tail = p.dot(traj.states.back());
  check.ok = std::abs(check.achieved - check.predicted) <= tail_tol + check.tail;
  return check;
}

}  // namespace posopt
