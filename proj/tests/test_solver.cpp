#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "certiglobe/simplex.hpp"
#include "certiglobe/solver.hpp"
#include "support/fixtures.hpp"

using namespace certiglobe;
using namespace certiglobe::testing;

TEST_CASE("lp: simple feasibility and infeasibility") {
  LinearProgram lp(2);
  lp.set_bounds(0, 0, 4);
  lp.set_bounds(1, 0, 4);
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::GE, 6.0);
  lp.add_row({{0, 1.0}, {1, -1.0}}, Relation::LE, 1.0);
  const LpResult r = lp.solve();
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.assignment[0] + r.assignment[1] >= 6.0 - 1e-7);
  CHECK(r.assignment[0] - r.assignment[1] <= 1.0 + 1e-7);

  LinearProgram bad(1);
  bad.set_bounds(0, 0, 1);
  bad.add_row({{0, 1.0}}, Relation::GE, 2.0);
  CHECK(bad.solve().status == LpStatus::Infeasible);
}

TEST_CASE("lp: equality chains and free variables") {
  LinearProgram lp(3);
  lp.set_bounds(0, 1, 1);
  lp.add_row({{0, 2.0}, {1, -1.0}}, Relation::EQ, 0.0);  // y = 2x
  lp.add_row({{1, 3.0}, {2, -1.0}}, Relation::EQ, 0.0);  // z = 3y
  const LpResult r = lp.solve();
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.assignment[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.assignment[2] == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("lp: phase-II maximization") {
  LinearProgram lp(2);
  lp.set_bounds(0, 0, 10);
  lp.set_bounds(1, 0, 10);
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::LE, 7.0);
  const LpResult r = lp.solve(std::optional<std::size_t>(0));
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.assignment[0] == doctest::Approx(7.0).epsilon(1e-7));
}

TEST_CASE("solve: spec trivial systems") {
  {
    ConstraintSystem sys;
    const VarId x = sys.add_var(1, 2);
    const VarId y = sys.add_var(-kInfinity, kInfinity);
    sys.add_relu(x, y);
    sys.add_equation({{{1.0, y}}, Relation::LE, 0.0});
    CHECK(solve(sys).status == SolveStatus::Infeasible);
  }
  {
    ConstraintSystem sys;
    const VarId x = sys.add_var(-2, -1);
    const VarId y = sys.add_var(-kInfinity, kInfinity);
    sys.add_relu(x, y);
    const SolveResult r = solve(sys);
    REQUIRE(r.status == SolveStatus::Feasible);
    CHECK(r.assignment[y.index] == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("deduce_bounds: ReLU activation and Max winner get fixed") {
  {
    ConstraintSystem sys;
    const VarId x = sys.add_var(1, 2);
    const VarId y = sys.add_var(-kInfinity, kInfinity);
    sys.add_relu(x, y);
    const BoundDeduction d = deduce_bounds(sys);
    CHECK(!d.conflict);
    CHECK(d.lower[y.index] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.upper[y.index] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(d.pwl_phase[0] == 1);
  }
  {
    ConstraintSystem sys;
    const VarId a = sys.add_var(0, 1);
    const VarId b = sys.add_var(3, 4);
    const VarId y = sys.add_var(-kInfinity, kInfinity);
    sys.add_max(y, {a, b});
    const BoundDeduction d = deduce_bounds(sys);
    CHECK(!d.conflict);
    CHECK(d.lower[y.index] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(d.upper[y.index] == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d.pwl_phase[0] == 1);  // winner is b
  }
  {
    // conflict surfaces as a result, not an exception
    ConstraintSystem sys;
    const VarId x = sys.add_var(1, 2);
    const VarId y = sys.add_var(-5, 0);
    sys.add_relu(x, y);
    sys.add_equation({{{1.0, y}}, Relation::LE, 0.5});
    const BoundDeduction d = deduce_bounds(sys);
    CHECK(d.conflict);
  }
}

TEST_CASE("solve: budget exhaustion is a distinct status") {
  // both alternatives stay interval-feasible, so a case split is unavoidable
  ConstraintSystem sys;
  const VarId x = sys.add_var(0, 1);
  Disjunction d;
  d.alternatives.push_back({{{1.0, x}}, Relation::EQ, 0.2});
  d.alternatives.push_back({{{1.0, x}}, Relation::EQ, 0.8});
  sys.add_disjunction(d);

  SolveOptions opts;
  opts.budget.max_splits = 0;
  CHECK(solve(sys, opts).status == SolveStatus::BudgetExhausted);
  CHECK(solve(sys).status == SolveStatus::Feasible);
}

TEST_CASE("solve: time budget exhaustion") {
  ConstraintSystem sys;
  const VarId x = sys.add_var(0, 1);
  Disjunction d;
  d.alternatives.push_back({{{1.0, x}}, Relation::EQ, 0.2});
  d.alternatives.push_back({{{1.0, x}}, Relation::EQ, 0.8});
  sys.add_disjunction(d);
  SolveOptions opts;
  opts.budget.max_seconds = 0.0;
  CHECK(solve(sys, opts).status == SolveStatus::BudgetExhausted);
}

TEST_CASE("eval_assignment and solving honor Abs semantics") {
  ConstraintSystem sys;
  const VarId x = sys.add_var(-3, -1);
  const VarId y = sys.add_var(-kInfinity, kInfinity);
  sys.add_abs(x, y);
  CHECK(eval_assignment(sys, std::vector<double>{-2.0, 2.0}).ok);
  CHECK(!eval_assignment(sys, std::vector<double>{-2.0, -2.0}).ok);

  sys.add_equation({{{1.0, y}}, Relation::GE, 2.5});
  const SolveResult r = solve(sys);
  REQUIRE(r.status == SolveStatus::Feasible);
  CHECK(r.assignment[y.index] == doctest::Approx(-r.assignment[x.index]).epsilon(1e-9));
  CHECK(r.assignment[y.index] >= 2.5 - 1e-9);
}

TEST_CASE("enumerate_oracle: pure LP and trivial systems agree with solve") {
  {
    ConstraintSystem sys;
    const VarId x = sys.add_var(0, 1);
    sys.add_equation({{{1.0, x}}, Relation::GE, 0.5});
    const SolveResult a = solve(sys);
    const SolveResult b = enumerate_oracle(sys);
    CHECK(a.status == b.status);
    CHECK(b.stats.splits == 0);  // single case
  }
  {
    ConstraintSystem sys;
    const VarId x = sys.add_var(1, 2);
    const VarId y = sys.add_var(-kInfinity, kInfinity);
    sys.add_relu(x, y);
    sys.add_equation({{{1.0, y}}, Relation::LE, 0.0});
    CHECK(enumerate_oracle(sys).status == SolveStatus::Infeasible);
  }
}

TEST_CASE("enumerate_oracle: case-count overflow is rejected") {
  ConstraintSystem sys;
  std::vector<VarId> vars;
  for (int i = 0; i < 44; ++i) vars.push_back(sys.add_var(-1, 1));
  for (int i = 0; i < 22; ++i) sys.add_relu(vars[2 * i], vars[2 * i + 1]);
  CHECK_THROWS_AS(enumerate_oracle(sys), std::invalid_argument);
}

TEST_CASE("hand-checked three-case fixture") {
  // y = ReLU(x), x in [-1, 2], y >= 1.5  ->  feasible only in the active case
  ConstraintSystem sys;
  const VarId x = sys.add_var(-1, 2);
  const VarId y = sys.add_var(-kInfinity, kInfinity);
  sys.add_relu(x, y);
  Disjunction d;
  d.alternatives.push_back({{{1.0, y}}, Relation::GE, 1.5});
  d.alternatives.push_back({{{1.0, x}}, Relation::LE, -2.0});  // impossible
  sys.add_disjunction(d);

  const SolveResult a = solve(sys);
  const SolveResult b = enumerate_oracle(sys);
  REQUIRE(a.status == SolveStatus::Feasible);
  REQUIRE(b.status == SolveStatus::Feasible);
  CHECK(eval_assignment(sys, a.assignment).ok);
  CHECK(eval_assignment(sys, b.assignment).ok);
  CHECK(a.assignment[x.index] >= 1.5 - 1e-7);
}

TEST_CASE("differential: solve matches enumerate_oracle on seeded systems") {
  int feasible = 0, infeasible = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const ConstraintSystem sys = random_system(seed);
    REQUIRE(validate(sys).empty());
    const SolveResult got = solve(sys);
    const SolveResult want = enumerate_oracle(sys);
    REQUIRE_MESSAGE(got.status == want.status, "seed ", seed);
    if (got.status == SolveStatus::Feasible) {
      ++feasible;
      const CheckResult chk = eval_assignment(sys, got.assignment);
      REQUIRE_MESSAGE(chk.ok, "seed ", seed, " cert fails: ", chk.first_failure);
    } else {
      ++infeasible;
    }
  }
  MESSAGE("differential split: ", feasible, " feasible / ", infeasible, " infeasible");
  CHECK(feasible > 10);
  CHECK(infeasible > 10);
}

TEST_CASE("deduced intervals contain oracle-found assignments") {
  for (std::uint64_t seed = 300; seed < 360; ++seed) {
    const ConstraintSystem sys = random_system(seed, 8);
    const SolveResult r = enumerate_oracle(sys);
    if (r.status != SolveStatus::Feasible) continue;
    const BoundDeduction d = deduce_bounds(sys);
    REQUIRE(!d.conflict);
    for (std::size_t v = 0; v < sys.num_vars(); ++v) {
      CHECK(r.assignment[v] >= d.lower[v] - 1e-6);
      CHECK(r.assignment[v] <= d.upper[v] + 1e-6);
      CHECK(d.lower[v] >= sys.lower(VarId{v}) - 1e-9);
      CHECK(d.upper[v] <= sys.upper(VarId{v}) + 1e-9);
    }
  }
}

TEST_CASE("feasible-by-construction systems are never reported infeasible") {
  // build the satisfying point first, then only constraints it satisfies;
  // this guards the Infeasible direction independently of the LP core
  for (std::uint64_t seed = 1000; seed < 1200; ++seed) {
    std::mt19937_64 rng(seed);
    ConstraintSystem sys;
    const std::size_t nv = 4 + rng() % 5;
    std::vector<double> point(nv);
    std::vector<VarId> vars;
    for (std::size_t i = 0; i < nv; ++i) {
      const double p = uniform(rng, -3.0, 3.0);
      point[i] = p;
      vars.push_back(sys.add_var(p - uniform(rng, 0.0, 2.0), p + uniform(rng, 0.0, 2.0)));
    }
    const std::size_t npwl = rng() % 4;
    for (std::size_t i = 0; 2 * i + 1 < nv && i < npwl; ++i) {
      const std::size_t in = 2 * i, out = 2 * i + 1;
      point[out] = std::max(0.0, point[in]);
      sys.set_bounds(vars[out], point[out] - 1.0, point[out] + 1.0);
      sys.add_relu(vars[in], vars[out]);
    }
    for (std::size_t i = 0; i < 3; ++i) {
      LinearEquation eq;
      double value = 0.0;
      for (std::size_t t = 0; t < 2; ++t) {
        const std::size_t v = rng() % nv;
        const double coef = uniform(rng, -2.0, 2.0);
        eq.terms.push_back({coef, vars[v]});
        value += coef * point[v];
      }
      const std::size_t kind = rng() % 3;
      if (kind == 0) {
        eq.rel = Relation::LE;
        eq.constant = value + uniform(rng, 0.0, 1.0);
      } else if (kind == 1) {
        eq.rel = Relation::GE;
        eq.constant = value - uniform(rng, 0.0, 1.0);
      } else {
        eq.rel = Relation::EQ;
        eq.constant = value;
      }
      sys.add_equation(eq);
    }
    const SolveResult r = solve(sys);
    REQUIRE_MESSAGE(r.status == SolveStatus::Feasible, "seed ", seed);
    REQUIRE(eval_assignment(sys, r.assignment).ok);
  }
}

TEST_CASE("determinism: identical input gives identical result and stats") {
  const ConstraintSystem sys = random_system(42);
  const SolveResult a = solve(sys);
  const SolveResult b = solve(sys);
  CHECK(a.status == b.status);
  CHECK(a.assignment == b.assignment);
  CHECK(a.stats.splits == b.stats.splits);
  CHECK(a.stats.lp_pivots == b.stats.lp_pivots);
  CHECK(a.stats.deductions == b.stats.deductions);
}

TEST_CASE("strict relations: solutions respect the slack") {
  ConstraintSystem sys;
  const VarId x = sys.add_var(0, 1);
  sys.add_equation({{{1.0, x}}, Relation::GT, 0.5});
  const SolveResult r = solve(sys);
  REQUIRE(r.status == SolveStatus::Feasible);
  CHECK(r.assignment[x.index] > 0.5);

  ConstraintSystem tight;
  const VarId y = tight.add_var(0, 0.5);
  tight.add_equation({{{1.0, y}}, Relation::GT, 0.5});
  CHECK(solve(tight).status == SolveStatus::Infeasible);
}

TEST_CASE("solve: maximize option improves the witness") {
  ConstraintSystem sys;
  const VarId x = sys.add_var(0, 5);
  const VarId y = sys.add_var(-kInfinity, kInfinity);
  sys.add_relu(x, y);
  sys.add_equation({{{1.0, y}}, Relation::GE, 1.0});
  SolveOptions opts;
  opts.maximize = y;
  const SolveResult r = solve(sys, opts);
  REQUIRE(r.status == SolveStatus::Feasible);
  CHECK(r.assignment[y.index] == doctest::Approx(5.0).epsilon(1e-7));
}
