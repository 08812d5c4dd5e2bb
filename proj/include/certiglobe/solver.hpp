#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "certiglobe/constraints.hpp"

namespace certiglobe {

/// Default slack used to realize strict relations: x > c is solved as
/// x >= c + slack, so verdicts are exact for the slack-perturbed system.
inline constexpr double kStrictSlack = 1e-6;

struct SolveBudget {
  std::size_t max_splits = std::numeric_limits<std::size_t>::max();
  double max_seconds = std::numeric_limits<double>::infinity();
};

struct SolveStats {
  std::size_t lp_pivots = 0;
  std::size_t splits = 0;
  std::size_t deductions = 0;
  double wall_seconds = 0.0;
};

enum class SolveStatus { Feasible, Infeasible, BudgetExhausted };

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> assignment;  ///< full variable vector when Feasible
  SolveStats stats;
};

struct SolveOptions {
  SolveBudget budget;
  double strict_slack = kStrictSlack;
  /// When set and the system is feasible, the returned certificate maximizes
  /// this variable over the discovered feasible cell (best effort).
  std::optional<VarId> maximize;
  int trace = 0;  ///< 0 silent, 1 splits, 2 also bound deductions (stderr)
};

/// Complete decision procedure: interval deduction, LP relaxation pruning and
/// case splitting over ReLU/Max/Abs phases and disjunction alternatives.
/// Feasible certificates pass eval_assignment; Infeasible is exact up to the
/// strictness slack and LP tolerance.
SolveResult solve(const ConstraintSystem& system, const SolveOptions& options = {});

/// Interval bound deduction to fixpoint. Never removes a feasible point.
/// pwl_phase: 0/1 for inactive/active ReLU (negative/positive Abs), winner
/// index for Max, -1 undetermined. disjunction_choice: forced alternative or
/// -1. A conflict means the system is infeasible by intervals alone.
struct BoundDeduction {
  std::vector<double> lower, upper;
  std::vector<int> pwl_phase;
  std::vector<int> disjunction_choice;
  bool conflict = false;
  std::string conflict_reason;
  std::size_t tightenings = 0;
};

BoundDeduction deduce_bounds(const ConstraintSystem& system);

/// Brute-force ground truth: enumerates every complete phase assignment
/// (product of branch counts, at most 2^20 cases) and solves each pure LP
/// with the same LP core as solve(). Throws std::invalid_argument when the
/// case count overflows the budget.
SolveResult enumerate_oracle(const ConstraintSystem& system, const SolveOptions& options = {});

}  // namespace certiglobe
