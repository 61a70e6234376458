#include <doctest.h>

#include "posopt/bellman.hpp"
#include "posopt/policy.hpp"
#include "testutil.hpp"

using namespace posopt;
using namespace posopt::testutil;

namespace {

Vec example1_fixed_point() {
  Vec p(4);
  p << 2, 1, 2, 0;
  return p;
}

Vec unit(Index n, Index k) {
  Vec e = Vec::Zero(n);
  e[k] = 1.0;
  return e;
}

}  // namespace

TEST_CASE("policy extraction on the four-node example") {
  const ProblemData ex1 = make_example1();
  const Policy policy = extract_policy(ex1, example1_fixed_point());

  // Partition order: edges from node 1 are (1->2, 1->3, 1->4), etc.
  REQUIRE(policy.choices.size() == 4);
  CHECK(policy.choices[0] == Index{0});  // 1->2
  CHECK(policy.choices[1] == Index{0});  // 2->4
  CHECK(policy.choices[2] == Index{0});  // 3->4
  CHECK_FALSE(policy.choices[3].has_value());

  Vec rc0(3), rc1(2), rc2(2), rc3(3);
  rc0 << -1, 0, 0;
  rc1 << -1, 1;
  rc2 << -1, 0;
  rc3 << 4, 1, 3;
  CHECK(policy.reduced_costs[0] == rc0);
  CHECK(policy.reduced_costs[1] == rc1);
  CHECK(policy.reduced_costs[2] == rc2);
  CHECK(policy.reduced_costs[3] == rc3);
}

TEST_CASE("zero cost-to-go with positive prices selects nothing") {
  ProblemData prob = make_example1();
  prob.s = Vec::Zero(4);
  for (auto& r : prob.r_blocks) r.array() += 0.5;  // strictly positive
  const Policy policy = extract_policy(prob, Vec::Zero(4));
  for (const auto& choice : policy.choices) CHECK_FALSE(choice.has_value());
}

TEST_CASE("ties break toward the lowest index") {
  ProblemData prob;
  prob.n = 2;
  prob.M = 1;
  prob.A = SpMat(Eigen::MatrixXd::Identity(2, 2).sparseView());
  Eigen::MatrixXd e(1, 2);
  e << 1, 0;
  prob.E = SpMatRow(e.sparseView());
  Eigen::MatrixXd b(2, 2);
  b << -1, -1, 1, 1;  // two identical edges 1 -> 2
  prob.B_blocks = {SpMat(b.sparseView())};
  prob.r_blocks = {Vec(Vec::Zero(2))};
  prob.s = Vec(2);
  prob.s << 1, 0;
  const SolveReport solve = value_iterate(prob);
  REQUIRE(solve.status == SolveStatus::FixedPoint);
  const Policy policy = extract_policy(prob, solve.p);
  REQUIRE(policy.choices[0].has_value());
  CHECK(*policy.choices[0] == 0);
  CHECK(policy.reduced_costs[0][0] == policy.reduced_costs[0][1]);
}

TEST_CASE("a stale cost vector is rejected") {
  const ProblemData ex1 = make_example1();
  Vec stale = example1_fixed_point();
  stale[0] += 0.1;
  CHECK_THROWS_AS(extract_policy(ex1, stale), std::invalid_argument);
}

TEST_CASE("gain assembly places constraint rows") {
  const ProblemData ex1 = make_example1();
  const Policy policy = extract_policy(ex1, example1_fixed_point());
  const SpMatRow gain = assemble_gain(ex1, policy);
  const Eigen::MatrixXd k = dense(gain);
  REQUIRE(k.rows() == 10);
  int nonzero_rows = 0;
  for (Index r = 0; r < k.rows(); ++r) {
    if (k.row(r).cwiseAbs().sum() > 0) ++nonzero_rows;
  }
  CHECK(nonzero_rows == 3);
  // Selected rows carry E_i^T = e_i^T: rows 0 (1->2), 3 (2->4), 5 (3->4).
  CHECK(k.row(0) == Eigen::RowVector4d(1, 0, 0, 0));
  CHECK(k.row(3) == Eigen::RowVector4d(0, 1, 0, 0));
  CHECK(k.row(5) == Eigen::RowVector4d(0, 0, 1, 0));

  SUBCASE("all no-action gives the zero gain") {
    Policy none;
    none.choices.assign(4, std::nullopt);
    CHECK(dense(assemble_gain(ex1, none)).cwiseAbs().sum() == 0.0);
  }
  SUBCASE("block placement inside a wider partition") {
    ProblemData prob;
    prob.n = 2;
    prob.M = 1;
    prob.A = SpMat(Eigen::MatrixXd::Identity(2, 2).sparseView());
    Eigen::MatrixXd e(1, 2);
    e << 1, 2;
    prob.E = SpMatRow(e.sparseView());
    prob.B_blocks = {SpMat(2, 3)};
    prob.r_blocks = {Vec(Vec::Zero(3))};
    Policy pick;
    pick.choices = {Index{1}};
    const Eigen::MatrixXd kk = dense(assemble_gain(prob, pick));
    CHECK(kk.row(0) == Eigen::RowVector2d(0, 0));
    CHECK(kk.row(1) == Eigen::RowVector2d(1, 2));
    CHECK(kk.row(2) == Eigen::RowVector2d(0, 0));
  }
}

TEST_CASE("closed-loop simulation walks the shortest path") {
  const ProblemData ex1 = make_example1();
  const Policy policy = extract_policy(ex1, example1_fixed_point());
  const Trajectory traj = simulate_closed_loop(ex1, policy, unit(4, 0), 5);
  REQUIRE(traj.states.size() == 6);
  CHECK(traj.states[0] == unit(4, 0));
  CHECK(traj.states[1] == unit(4, 1));
  CHECK(traj.states[2] == unit(4, 3));
  CHECK(traj.states[3] == unit(4, 3));  // absorbed at the target
  CHECK(traj.stage_costs[0] == 1.0);
  CHECK(traj.stage_costs[1] == 1.0);
  CHECK(traj.stage_costs[2] == 0.0);
  CHECK(traj.total_cost == 2.0);

  SUBCASE("zero start stays at zero") {
    const Trajectory z = simulate_closed_loop(ex1, policy, Vec::Zero(4), 4);
    CHECK(z.total_cost == 0.0);
    for (const auto& x : z.states) CHECK(x.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("zero horizon records only the start") {
    const Trajectory z = simulate_closed_loop(ex1, policy, unit(4, 0), 0);
    CHECK(z.states.size() == 1);
    CHECK(z.total_cost == 0.0);
  }
}

TEST_CASE("achieved cost matches the predicted value") {
  const ProblemData ex1 = make_example1();
  const Vec pstar = example1_fixed_point();
  const Policy policy = extract_policy(ex1, pstar);

  CostCheck check = verify_cost(ex1, policy, pstar, unit(4, 0), 10);
  CHECK(check.achieved == 2.0);
  CHECK(check.predicted == 2.0);
  CHECK(check.ok);

  check = verify_cost(ex1, policy, pstar, unit(4, 3), 10);
  CHECK(check.achieved == 0.0);
  CHECK(check.predicted == 0.0);
  CHECK(check.ok);

  check = verify_cost(ex1, policy, pstar, Vec::Ones(4), 10);
  CHECK(check.predicted == 5.0);
  CHECK(check.achieved == 5.0);  // settled after two steps
  CHECK(check.ok);
}

TEST_CASE("closed loop is feasible and positive on generated instances") {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const GraphSpec graph = generate_cooling_instance(8, seed);
    const ProblemData prob = build_flow_network(graph);
    const SolveReport solve = value_iterate(prob);
    REQUIRE(solve.status == SolveStatus::FixedPoint);
    const Policy policy = extract_policy(prob, solve.p);
    DetRng rng(seed);
    const Vec x0 = random_state(prob, rng);
    const Trajectory traj = simulate_closed_loop(prob, policy, x0, 50);
    for (size_t t = 0; t < traj.inputs.size(); ++t) {
      CHECK(input_feasible(prob, traj.states[t], traj.inputs[t], 1e-9));
    }
    for (const auto& x : traj.states) CHECK(x.minCoeff() >= 0.0);
    const CostCheck check = verify_cost(prob, policy, solve.p, x0, 2000, 1e-6);
    CHECK(check.ok);
  }
}

TEST_CASE("no feasible strategy beats the predicted value") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const GraphSpec graph = generate_cooling_instance(5, derive_seed(seed, 3));
    const ProblemData prob = build_flow_network(graph);
    const SolveReport solve = value_iterate(prob);
    REQUIRE(solve.status == SolveStatus::FixedPoint);
    DetRng rng(seed);
    const Vec x0 = random_state(prob, rng, 1.0);
    const double predicted = solve.p.dot(x0);
    for (int trial = 0; trial < 20; ++trial) {
      Vec x = x0;
      double accumulated = 0.0;
      const Vec r = prob.r_concat();
      for (int t = 0; t < 30; ++t) {
        const Vec u = random_feasible_input(prob, x, rng);
        accumulated += prob.s.dot(x) + r.dot(u);
        x = successor(prob, x, u);
      }
      CHECK(accumulated + solve.p.dot(x) >= predicted - 1e-8);
    }
  }
}

TEST_CASE("joint cost scaling leaves the choices unchanged") {
  const ProblemData base = make_example1();
  const Policy ref = extract_policy(base, example1_fixed_point());
  for (double lambda : {2.0, 10.0}) {
    ProblemData scaled = base;
    scaled.s *= lambda;
    for (auto& r : scaled.r_blocks) r *= lambda;
    const Policy policy =
        extract_policy(scaled, Vec(lambda * example1_fixed_point()));
    REQUIRE(policy.choices.size() == ref.choices.size());
    for (size_t i = 0; i < ref.choices.size(); ++i) {
      CHECK(policy.choices[i] == ref.choices[i]);
    }
  }
}
