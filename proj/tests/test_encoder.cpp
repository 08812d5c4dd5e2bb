#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "certiglobe/encoder.hpp"
#include "certiglobe/solver.hpp"
#include "certiglobe/verifier.hpp"
#include "support/nets.hpp"
#include "support/oracles.hpp"

using namespace certiglobe;
using namespace certiglobe::testing;

namespace {

void pin_inputs(ConstraintSystem& sys, const ProductVars& vars, std::size_t copy,
                const std::vector<double>& x) {
  for (std::size_t c = 0; c < x.size(); ++c) sys.set_bounds(vars.inputs[copy][c], x[c], x[c]);
}

}  // namespace

TEST_CASE("encode_product: variable counts and duplication") {
  const Network net = generate_network(5, 2, 2, {3}, 1.0);
  ConstraintSystem sys;
  const ProductVars vars = encode_product(sys, net);
  CHECK(vars.inputs[0].size() == 2);
  CHECK(vars.inputs[1].size() == 2);
  // per copy: m inputs + hidden pre + hidden post + n logits
  const std::size_t per_copy = 2 + 3 + 3 + 2;
  CHECK(sys.num_vars() == 2 * per_copy);
  CHECK(validate(sys).empty());
}

TEST_CASE("encode_product: pinning both copies reproduces eval_logits") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const Network net = generate_network(100 + static_cast<std::uint64_t>(trial), 3, 2, {4}, 1.2);
    ConstraintSystem sys;
    const ProductVars vars = encode_product(sys, net);
    std::vector<double> x(3);
    for (double& v : x) v = uniform01(rng);
    pin_inputs(sys, vars, 0, x);
    pin_inputs(sys, vars, 1, x);
    const SolveResult res = solve(sys);
    REQUIRE(res.status == SolveStatus::Feasible);
    const auto z = eval_logits(net, x);
    for (std::size_t copy = 0; copy < 2; ++copy)
      for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(res.assignment[vars.logits[copy][i].index] == doctest::Approx(z[i]).epsilon(1e-7));
  }
}

TEST_CASE("encode_product: pinning one copy leaves the other free") {
  const Network net = generate_network(7, 2, 2, {3}, 1.0);
  ConstraintSystem sys;
  const ProductVars vars = encode_product(sys, net);
  pin_inputs(sys, vars, 0, {0.25, 0.75});
  const SolveResult res = solve(sys);
  REQUIRE(res.status == SolveStatus::Feasible);
  // the second copy settled on some valid input whose logits are consistent
  std::vector<double> x1(2);
  for (std::size_t c = 0; c < 2; ++c) x1[c] = res.assignment[vars.inputs[1][c].index];
  const auto z1 = eval_logits(net, x1);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(res.assignment[vars.logits[1][i].index] == doctest::Approx(z1[i]).epsilon(1e-7));
}

TEST_CASE("encode_cond: zero tolerance degenerates to equality") {
  const Network net = generate_network(9, 2, 2, {3}, 1.0);
  ConstraintSystem sys;
  const ProductVars vars = encode_product(sys, net);
  SafetySpec spec;
  spec.property = RobustnessProperty{{0.0, 0.0}};
  spec.kappa = 0.8;
  encode_cond(sys, net, spec, vars);
  pin_inputs(sys, vars, 0, {0.3, 0.6});
  const SolveResult res = solve(sys);
  REQUIRE(res.status == SolveStatus::Feasible);
  CHECK(res.assignment[vars.inputs[1][0].index] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(res.assignment[vars.inputs[1][1].index] == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("encode_cond: binary sensitive feature yields a two-alternative disjunction") {
  const Network net = fairness_net(1.0, 1.0);
  ConstraintSystem sys;
  const ProductVars vars = encode_product(sys, net);
  const std::size_t before = sys.disjunctions().size();  // one-hot structure
  SafetySpec spec;
  spec.property = FairnessProperty{{1}, {0.1, 0.1}};
  encode_cond(sys, net, spec, vars);
  REQUIRE(sys.disjunctions().size() == before + 1);
  CHECK(sys.disjunctions().back().alternatives.size() == 2);

  // every certificate flips the sensitive one-hot and keeps the rest close
  const SolveResult res = solve(sys);
  REQUIRE(res.status == SolveStatus::Feasible);
  const double x1 = res.assignment[vars.inputs[0][1].index];
  const double x1p = res.assignment[vars.inputs[1][1].index];
  CHECK(std::fabs(x1 - x1p) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::fabs(res.assignment[vars.inputs[0][0].index] -
                  res.assignment[vars.inputs[1][0].index]) <= 0.1 + 1e-7);
}

TEST_CASE("encode_cond: fairness rejects a real-valued sensitive feature") {
  const Network net = generate_network(5, 2, 2, {3}, 1.0);
  SafetySpec spec;
  spec.property = FairnessProperty{{0}, {0.1, 0.1}};
  CHECK_THROWS_AS(validate_spec(net, spec), std::invalid_argument);
}

TEST_CASE("encode_confidence: pinned logits match softmax_hat_lower") {
  const PwlSigmoid pwl = remez_sigmoid(0.005);
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 6; ++trial) {
    const Network net =
        generate_network(300 + static_cast<std::uint64_t>(trial), 2, 2 + trial % 3, {4}, 1.5);
    ConstraintSystem sys;
    const ProductVars vars = encode_product(sys, net);
    const ConfidenceVars cv = encode_confidence_value(sys, net, pwl, vars, 0);
    std::vector<double> x(2);
    for (double& v : x) v = uniform01(rng);
    pin_inputs(sys, vars, 0, x);
    const SolveResult res = solve(sys);
    REQUIRE(res.status == SolveStatus::Feasible);

    const auto z = eval_logits(net, x);
    double want = -1.0;
    for (std::size_t i = 0; i < z.size(); ++i) want = std::max(want, softmax_hat_lower(z, i, pwl));
    const double got = res.assignment[cv.conf.index] - cv.delta;
    CHECK(got == doctest::Approx(want).epsilon(1e-7));
  }
}

TEST_CASE("encode_confidence: saturated and uniform corner cases") {
  const PwlSigmoid pwl = remez_sigmoid(0.005);
  {
    // logits pinned far apart: score saturates at the clamp value 1
    const Network net = boundary_net(40.0);
    ConstraintSystem sys;
    const ProductVars vars = encode_product(sys, net);
    const ConfidenceVars cv = encode_confidence_value(sys, net, pwl, vars, 0);
    pin_inputs(sys, vars, 0, {1.0});
    const SolveResult res = solve(sys);
    REQUIRE(res.status == SolveStatus::Feasible);
    CHECK(res.assignment[cv.conf.index] == doctest::Approx(1.0).epsilon(1e-7));
    add_confidence_threshold(sys, cv, 0.95);
    CHECK(solve(sys).status == SolveStatus::Feasible);
  }
  {
    // all-equal logits, n = 3: conf-hat ~ 1/3, threshold 0.6 unreachable
    const Network net = three_class_net(0.0);
    ConstraintSystem sys;
    const ProductVars vars = encode_product(sys, net);
    const ConfidenceVars cv = encode_confidence_value(sys, net, pwl, vars, 0);
    pin_inputs(sys, vars, 0, {0.5});
    add_confidence_threshold(sys, cv, 0.6);
    CHECK(solve(sys).status == SolveStatus::Infeasible);
  }
}

TEST_CASE("add_confidence_threshold validates its range") {
  ConstraintSystem sys;
  ConfidenceVars cv;
  cv.conf = sys.add_var(0, 1);
  cv.delta = 0.005;
  CHECK_THROWS_AS(add_confidence_threshold(sys, cv, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(add_confidence_threshold(sys, cv, 1.0), std::invalid_argument);
}

TEST_CASE("encode_class_disequality: the '< 0' branch is vacuous") {
  const Network net = generate_network(21, 2, 2, {3}, 1.0);
  const PwlSigmoid pwl = remez_sigmoid(0.005);
  for (std::size_t i = 0; i < 2; ++i) {
    ConstraintSystem sys;
    const ProductVars vars = encode_product(sys, net);
    encode_class_disequality(sys, vars, i, DisequalityBranch::Less);
    CHECK(solve(sys).status == SolveStatus::Infeasible);
  }
  (void)pwl;
}

TEST_CASE("build_query_family: shape and validity") {
  const Network net = generate_network(31, 2, 2, {4}, 1.0);
  const PwlSigmoid pwl = remez_sigmoid(0.005);
  SafetySpec spec;
  spec.property = RobustnessProperty{{0.1, 0.1}};
  spec.kappa = 0.8;

  const QueryFamily family = build_query_family(net, spec, pwl, 0.79);
  CHECK(family.queries.size() == 2);
  for (const EncodedQuery& q : family.queries) CHECK(validate(q.system).empty());

  const QueryFamily fidelity = build_query_family(net, spec, pwl, 0.79, true);
  CHECK(fidelity.queries.size() == 4);

  // closed-form variable count: product nodes + confidence machinery
  const std::size_t m = 2, h = 4, n = 2;
  const std::size_t product = 2 * (m + h + h + n);
  // lowering: 4 constants, one line var per segment, 4 lower-piece and
  // 3 upper-piece auxiliaries
  const std::size_t lowering = pwl.segments().size() + 11;
  const std::size_t confidence = n * (3 + lowering) + 1;  // m_i, t_i, s_i, lowering, conf
  const std::size_t diseq = 2;                            // cmax, cmax'
  CHECK(family.queries[0].system.num_vars() == product + confidence + diseq);
}

TEST_CASE("constant network: whole family is infeasible") {
  const Network net = constant_net();
  const PwlSigmoid pwl = remez_sigmoid(0.005);
  SafetySpec spec;
  spec.property = RobustnessProperty{{1.0, 1.0}};
  spec.kappa = 0.8;
  const QueryFamily family = build_query_family(net, spec, pwl, 0.79);
  for (const EncodedQuery& q : family.queries) CHECK(solve(q.system).status == SolveStatus::Infeasible);
}
