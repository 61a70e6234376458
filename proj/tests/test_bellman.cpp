#include <doctest.h>

#include "posopt/bellman.hpp"
#include "testutil.hpp"

using namespace posopt;
using namespace posopt::testutil;

namespace {

ProblemData scalar_no_input(double a, double s) {
  ProblemData prob;
  prob.n = 1;
  prob.M = 0;
  Eigen::MatrixXd am(1, 1);
  am << a;
  prob.A = am.sparseView();
  prob.E = SpMatRow(0, 1);
  prob.s = Vec(1);
  prob.s << s;
  return prob;
}

}  // namespace

TEST_CASE("bellman_apply matches the hand-evaluated map") {
  const ProblemData ex1 = make_example1();

  Vec zero = Vec::Zero(4);
  CHECK(bellman_apply(ex1, zero) == ex1.s);  // min{r_i, 0} = 0 for r >= 0

  Vec pstar(4);
  pstar << 2, 1, 2, 0;
  CHECK((bellman_apply(ex1, pstar) - pstar).lpNorm<Eigen::Infinity>() == 0.0);

  SUBCASE("no inputs leaves only s + A^T p") {
    ProblemData prob = scalar_no_input(1.0, 1.0);
    Vec p(1);
    p << 7.0;
    CHECK(bellman_apply(prob, p)[0] == 8.0);
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(bellman_apply(ex1, Vec::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("bellman_residual is the sup-norm defect") {
  const ProblemData ex1 = make_example1();
  Vec pstar(4);
  pstar << 2, 1, 2, 0;
  CHECK(bellman_residual(ex1, pstar) == 0.0);
  CHECK(bellman_residual(ex1, Vec::Zero(4)) == 1.0);
}

TEST_CASE("value iteration on the four-node example") {
  const ProblemData ex1 = make_example1();
  SolveOptions opts;
  opts.record_trace = true;
  const SolveReport report = value_iterate(ex1, opts);
  CHECK(report.status == SolveStatus::FixedPoint);
  Vec pstar(4);
  pstar << 2, 1, 2, 0;
  CHECK((report.p - pstar).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(report.iterations <= 4);  // integer values settle within n sweeps
  CHECK(report.residual_trace.size() == static_cast<size_t>(report.iterations));
  CHECK(report.per_coordinate_trace.size() ==
        static_cast<size_t>(report.iterations) + 1);
  CHECK(bellman_residual(ex1, report.p) <= opts.tol);
}

TEST_CASE("divergence is certified by cap crossing") {
  const ProblemData prob = scalar_no_input(1.0, 1.0);  // p_k = k
  SolveOptions opts;
  opts.divergence_cap = 1e4;
  opts.max_iter = 100000;
  const SolveReport report = value_iterate(prob, opts);
  CHECK(report.status == SolveStatus::Diverged);
  CHECK(report.p[0] > 1e4);
}

TEST_CASE("zero stage cost fixes the origin in one step") {
  ProblemData prob = make_example1();
  prob.s = Vec::Zero(4);
  const SolveReport report = value_iterate(prob);
  CHECK(report.status == SolveStatus::FixedPoint);
  CHECK(report.iterations == 1);
  CHECK(report.p.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("iteration cap reports MaxIterations") {
  SolveOptions opts;
  opts.max_iter = 2;
  const SolveReport report = value_iterate(make_example1(), opts);
  CHECK(report.status == SolveStatus::MaxIterations);
  CHECK(report.iterations == 2);
}

TEST_CASE("invalid parameters are rejected") {
  const ProblemData ex1 = make_example1();
  SolveOptions opts;
  opts.tol = 0.0;
  CHECK_THROWS_AS(value_iterate(ex1, opts), std::invalid_argument);
  opts = {};
  opts.max_iter = 0;
  CHECK_THROWS_AS(value_iterate(ex1, opts), std::invalid_argument);
  opts = {};
  opts.divergence_cap = -1.0;
  CHECK_THROWS_AS(value_iterate(ex1, opts), std::invalid_argument);
}

TEST_CASE("unvalidated instances are refused unless overridden") {
  ProblemData prob = make_example1();
  prob.s[0] = -1.0;
  CHECK_THROWS_AS(value_iterate(prob), validation_error);
  SolveOptions opts;
  opts.unsafe = true;
  opts.max_iter = 10;
  CHECK_NOTHROW(value_iterate(prob, opts));
}

TEST_CASE("iterates from zero grow monotonically") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemData prob = random_validated_instance(seed);
    SolveOptions opts;
    opts.max_iter = 150;
    opts.divergence_cap = 1e9;
    opts.record_trace = true;
    const SolveReport report = value_iterate(prob, opts);
    for (size_t k = 1; k < report.per_coordinate_trace.size(); ++k) {
      const Vec& prev = report.per_coordinate_trace[k - 1];
      const Vec& cur = report.per_coordinate_trace[k];
      for (Index i = 0; i < prob.n; ++i) {
        CHECK(cur[i] >= prev[i] - 1e-12);
        CHECK(cur[i] >= -1e-12);  // iterates stay in the orthant
      }
    }
  }
}

TEST_CASE("the operator preserves elementwise order") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemData prob = random_validated_instance(seed);
    DetRng rng(derive_seed(seed, 7));
    for (int trial = 0; trial < 20; ++trial) {
      Vec p(prob.n), bump(prob.n);
      for (Index i = 0; i < prob.n; ++i) {
        p[i] = rng.uniform(0.0, 3.0);
        bump[i] = rng.uniform(0.0, 2.0);
      }
      const Vec tp = bellman_apply(prob, p);
      const Vec tq = bellman_apply(prob, p + bump);
      for (Index i = 0; i < prob.n; ++i) CHECK(tq[i] >= tp[i] - 1e-12);
    }
  }
}

TEST_CASE("scaling both cost vectors scales the fixed point") {
  const ProblemData base = make_example1();
  const SolveReport ref = value_iterate(base);
  for (double lambda : {2.0, 10.0}) {
    ProblemData scaled = base;
    scaled.s *= lambda;
    for (auto& r : scaled.r_blocks) r *= lambda;
    const SolveReport report = value_iterate(scaled);
    REQUIRE(report.status == SolveStatus::FixedPoint);
    CHECK((report.p - lambda * ref.p).lpNorm<Eigen::Infinity>() <=
          1e-9 * lambda);
  }
}

TEST_CASE("warm starts below the fixed point converge to it") {
  const ProblemData ex1 = make_example1();
  Vec pstar(4);
  pstar << 2, 1, 2, 0;

  SolveOptions opts;
  opts.warm_start = pstar;
  const SolveReport at_fixed = value_iterate(ex1, opts);
  CHECK(at_fixed.status == SolveStatus::FixedPoint);
  CHECK(at_fixed.iterations == 1);

  opts.warm_start = Vec(0.5 * pstar);  // p <= T(p) holds below the fixed point
  const SolveReport from_half = value_iterate(ex1, opts);
  CHECK(from_half.status == SolveStatus::FixedPoint);
  CHECK((from_half.p - pstar).lpNorm<Eigen::Infinity>() <= 1e-8);
}
