#include <doctest.h>

#include <fstream>

#include "posopt/bellman.hpp"
#include "posopt/io.hpp"
#include "posopt/lp.hpp"
#include "testutil.hpp"

using namespace posopt;
using namespace posopt::testutil;

namespace {

std::string golden(const std::string& name) {
  return read_text_file(std::string(POSOPT_GOLDEN_DIR) + "/" + name);
}

Vec example1_fixed_point() {
  Vec p(4);
  p << 2, 1, 2, 0;
  return p;
}

Vec example1_multipliers() {
  Vec z(4);
  z << 1, 1, 1, 0;
  return z;
}

}  // namespace

TEST_CASE("model dimensions for the four-node example") {
  const LpModel model = build_lp(make_example1());
  CHECK(model.num_vars() == 8);
  REQUIRE(model.rows.size() == 14);  // 4 Bellman + 10 reduced-cost rows
  CHECK(model.rows[0].name == "bell_1");
  CHECK(model.rows[3].name == "bell_4");
  CHECK(model.rows[4].name == "red_1_1");
  CHECK(model.rows[13].name == "red_4_3");

  SUBCASE("no partitions leaves only the Bellman rows") {
    ProblemData prob;
    prob.n = 1;
    prob.M = 0;
    Eigen::MatrixXd a(1, 1);
    a << 0;
    prob.A = a.sparseView();
    prob.E = SpMatRow(0, 1);
    prob.s = Vec(1);
    prob.s << 1;
    const LpModel small = build_lp(prob);
    CHECK(small.num_vars() == 1);
    REQUIRE(small.rows.size() == 1);
    REQUIRE(small.rows[0].terms.size() == 1);
    CHECK(small.rows[0].terms[0].coeff == 1.0);
    CHECK(small.rows[0].rhs == 1.0);
  }
}

TEST_CASE("the fixed point with its multipliers satisfies every row") {
  const FeasibilityCheck check =
      check_feasible(build_lp(make_example1()), example1_fixed_point(),
                     example1_multipliers());
  CHECK(check.feasible);
  CHECK(check.max_violation <= 0.0);
}

TEST_CASE("raising a priced coordinate breaks feasibility by that amount") {
  const ProblemData ex1 = make_example1();
  Vec p = example1_fixed_point();
  p[0] += 1.0;
  // Multipliers recomputed from the perturbed point, as certify_optimal does.
  const Certificate cert = certify_optimal(ex1, p);
  CHECK_FALSE(cert.feasible);
  CHECK(cert.max_violation == doctest::Approx(1.0));

  SUBCASE("the origin with zero multipliers is feasible whenever costs are") {
    const FeasibilityCheck at_zero =
        check_feasible(build_lp(ex1), Vec::Zero(4), Vec::Zero(4));
    CHECK(at_zero.feasible);
  }
}

TEST_CASE("certificates separate fixed points from other vectors") {
  const ProblemData ex1 = make_example1();

  const Certificate good = certify_optimal(ex1, example1_fixed_point());
  CHECK(good.feasible);
  CHECK((good.z - example1_multipliers()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(good.all_bellman_tight);
  CHECK(good.tight_rows.size() == 4);

  const Certificate at_zero = certify_optimal(ex1, Vec::Zero(4));
  CHECK(at_zero.feasible);
  CHECK(at_zero.z.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_FALSE(at_zero.all_bellman_tight);
  // Rows 1..3 have slack s_i = 1; the target row is tight at zero.
  CHECK(at_zero.tight_rows == std::vector<Index>{3});

  Vec off = example1_fixed_point();
  off[1] += 1e-3;
  const Certificate bad = certify_optimal(ex1, off);
  CHECK_FALSE(bad.feasible && bad.all_bellman_tight);
}

TEST_CASE("certificate holds exactly when the residual is small") {
  const double tol = 1e-8;
  for (std::uint64_t seed = 20; seed < 32; ++seed) {
    const GraphSpec graph = generate_cooling_instance(6, seed);
    const ProblemData prob = build_flow_network(graph);
    SolveOptions opts;
    opts.tol = 1e-12;
    const SolveReport solve = value_iterate(prob, opts);
    REQUIRE(solve.status == SolveStatus::FixedPoint);

    const Certificate at_fixed = certify_optimal(prob, solve.p, tol);
    CHECK(at_fixed.feasible);
    CHECK(at_fixed.all_bellman_tight);
    CHECK(bellman_residual(prob, solve.p) <=
          static_cast<double>(prob.n) * tol);

    DetRng rng(seed);
    Vec perturbed = solve.p;
    perturbed[static_cast<Index>(rng.below(
        static_cast<std::uint64_t>(prob.n)))] += 1e-4;
    const Certificate off = certify_optimal(prob, perturbed, tol);
    const bool certified = off.feasible && off.all_bellman_tight;
    CHECK(certified ==
          (bellman_residual(prob, perturbed) <=
           static_cast<double>(prob.n) * tol));
  }
}

TEST_CASE("feasible points below the fixed point never dominate it") {
  // Value-iteration prefixes, scaled fixed points and their convex
  // combinations are all feasible; each stays below p* and iterating the
  // operator from it recovers p* exactly (least fixed point).
  for (std::uint64_t seed = 40; seed < 46; ++seed) {
    const GraphSpec graph = generate_cooling_instance(6, seed);
    const ProblemData prob = build_flow_network(graph);
    SolveOptions opts;
    opts.record_trace = true;
    const SolveReport solve = value_iterate(prob, opts);
    REQUIRE(solve.status == SolveStatus::FixedPoint);
    const Vec& pstar = solve.p;
    const LpModel model = build_lp(prob);

    std::vector<Vec> candidates;
    for (size_t k = 0; k < solve.per_coordinate_trace.size(); k += 5) {
      candidates.push_back(solve.per_coordinate_trace[k]);
    }
    DetRng rng(seed);
    for (int j = 0; j < 5; ++j) {
      candidates.push_back(rng.uniform(0.0, 1.0) * pstar);
    }
    candidates.push_back(0.5 * candidates.front() + 0.5 * pstar);

    for (const Vec& p : candidates) {
      Vec z(prob.M);
      for (Index i = 0; i < prob.M; ++i) {
        const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
        Vec reduced = prob.r_blocks[static_cast<size_t>(i)] +
                      block.transpose() * p;
        z[i] = -std::min(reduced.minCoeff(), 0.0);
      }
      const FeasibilityCheck check = check_feasible(model, p, z, 1e-9);
      CHECK(check.feasible);
      CHECK(p.sum() <= pstar.sum() + 1e-8);
      for (Index i = 0; i < prob.n; ++i) CHECK(p[i] <= pstar[i] + 1e-9);

      Vec q = p;
      for (int it = 0; it < 3000; ++it) q = bellman_apply(prob, q);
      CHECK((q - pstar).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
  }
}

TEST_CASE("text export reproduces the golden files byte for byte") {
  const ProblemData ex1 = make_example1();
  const LpModel model = build_lp(ex1);
  CHECK(export_lp_text(model) == golden("example1.lp"));
  CHECK(export_mps_text(model) == golden("example1.mps"));
  // Determinism across repeated builds of the same instance.
  CHECK(export_lp_text(build_lp(ex1)) == export_lp_text(build_lp(ex1)));
}

TEST_CASE("single-row export renders an empty coefficient row") {
  ProblemData prob;
  prob.n = 1;
  prob.M = 0;
  Eigen::MatrixXd a(1, 1);
  a << 1;  // (I - A^T) row vanishes
  prob.A = a.sparseView();
  prob.E = SpMatRow(0, 1);
  prob.s = Vec(1);
  prob.s << 1;
  const std::string text = export_lp_text(build_lp(prob));
  CHECK(text.find("bell_1: 0 p_1 <= 1") != std::string::npos);
}

TEST_CASE("bounds section lists every variable") {
  const std::string text = export_lp_text(build_lp(make_example1()));
  for (const char* name : {"p_1", "p_4", "z_1", "z_4"}) {
    CHECK(text.find(std::string(" ") + name + " >= 0\n") != std::string::npos);
  }
}

TEST_CASE("the literal printed form flips the reduced-cost rows") {
  LpBuildOptions opts;
  opts.literal_printed_form = true;
  const LpModel literal = build_lp(make_example1(), opts);
  const std::string text = export_lp_text(literal);
  // Printed orientation: B_ij^T p - z_i <= -r_ij, so edge 1->4 (cost 2) reads
  // - p_1 + p_4 - z_1 <= -2 instead of p_1 - p_4 - z_1 <= 2.
  CHECK(text.find("red_1_3: - p_1 + p_4 - z_1 <= -2") != std::string::npos);
  // Under this orientation the fixed point is not feasible (the paper's
  // sign makes z_4 both 0 and >= 4).
  const FeasibilityCheck check =
      check_feasible(literal, example1_fixed_point(), example1_multipliers());
  CHECK_FALSE(check.feasible);
}
