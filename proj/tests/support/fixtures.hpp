#pragma once

// Seeded random constraint systems for the solver differential suite.

#include <cstdint>
#include <random>
#include <vector>

#include "certiglobe/constraints.hpp"
#include "support/oracles.hpp"

namespace certiglobe::testing {

/// Random system with at most `max_pwl` piecewise-linear constraints. All
/// variables are boxed so the enumeration oracle stays cheap; feasibility is
/// roughly a coin flip across seeds.
inline ConstraintSystem random_system(std::uint64_t seed, std::size_t max_pwl = 12) {
  std::mt19937_64 rng(seed);
  ConstraintSystem sys;
  const std::size_t nv = 4 + static_cast<std::size_t>(uniform01(rng) * 5);
  std::vector<VarId> vars;
  for (std::size_t i = 0; i < nv; ++i) {
    const double a = uniform(rng, -4.0, 4.0);
    const double b = uniform(rng, -4.0, 4.0);
    vars.push_back(sys.add_var(std::min(a, b), std::max(a, b)));
  }
  auto pick = [&](std::size_t exclude) {
    std::size_t v = rng() % nv;
    while (v == exclude) v = rng() % nv;
    return v;
  };

  const std::size_t npwl = 1 + rng() % max_pwl;
  std::vector<char> taken(nv, 0);
  for (std::size_t i = 0; i < npwl; ++i) {
    const std::size_t kind = rng() % 4;
    std::size_t out = rng() % nv;
    // at most one PWL output per variable keeps instances satisfiable often
    // enough to exercise both verdicts
    std::size_t tries = 0;
    while (taken[out] && tries++ < nv) out = rng() % nv;
    if (taken[out]) continue;
    taken[out] = 1;
    sys.set_bounds(vars[out], -6.0, 6.0);  // keep the output range reachable
    if (kind == 0) {
      sys.add_relu(vars[pick(out)], vars[out]);
    } else if (kind == 1) {
      sys.add_abs(vars[pick(out)], vars[out]);
    } else {
      std::vector<VarId> ins;
      const std::size_t k = 1 + rng() % 3;
      for (std::size_t j = 0; j < k; ++j) ins.push_back(vars[pick(out)]);
      sys.add_max(vars[out], std::move(ins));
    }
  }

  const std::size_t neq = rng() % 4;
  auto random_equation = [&]() {
    LinearEquation eq;
    const std::size_t k = 1 + rng() % 3;
    std::vector<char> used(nv, 0);
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t v = rng() % nv;
      while (used[v]) v = rng() % nv;
      used[v] = 1;
      eq.terms.push_back({uniform(rng, -2.0, 2.0), vars[v]});
    }
    const std::size_t r = rng() % 6;
    eq.rel = r == 0   ? Relation::LE
             : r == 1 ? Relation::GE
             : r == 2 ? Relation::EQ
             : r == 3 ? Relation::LT
             : r == 4 ? Relation::GT
                      : Relation::LE;
    eq.constant = uniform(rng, -2.0, 4.0);
    return eq;
  };
  for (std::size_t i = 0; i < neq; ++i) sys.add_equation(random_equation());

  const std::size_t ndisj = rng() % 3;
  for (std::size_t i = 0; i < ndisj; ++i) {
    Disjunction d;
    const std::size_t k = 1 + rng() % 3;
    for (std::size_t j = 0; j < k; ++j) d.alternatives.push_back(random_equation());
    sys.add_disjunction(std::move(d));
  }
  return sys;
}

}  // namespace certiglobe::testing
