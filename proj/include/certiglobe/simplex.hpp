#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "certiglobe/constraints.hpp"

namespace certiglobe {

/// Pivot tolerance of the simplex core.
inline constexpr double kPivotTolerance = 1e-9;

enum class LpStatus { Feasible, Infeasible, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> assignment;  ///< structural variables, present when Feasible
  std::size_t pivots = 0;
};

/// A pure LP: box-bounded variables and LE/GE/EQ rows. Strict relations must
/// be rewritten by the caller before reaching this layer.
class LinearProgram {
 public:
  explicit LinearProgram(std::size_t num_vars);

  void set_bounds(std::size_t var, double lo, double hi);
  void add_row(std::vector<std::pair<std::size_t, double>> terms, Relation rel, double rhs);

  std::size_t num_vars() const { return lo_.size(); }

  /// Phase-I feasibility via a bounded-variable primal simplex with
  /// artificial variables and Bland's rule. When `maximize_var` is given and
  /// the program is feasible, a Phase-II pass pushes that variable as high
  /// as the iteration budget allows (the result stays feasible either way).
  LpResult solve(std::optional<std::size_t> maximize_var = std::nullopt,
                 std::size_t max_pivots = 1u << 20) const;

 private:
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    Relation rel = Relation::EQ;
    double rhs = 0.0;
  };

  std::vector<double> lo_, hi_;
  std::vector<Row> rows_;
};

}  // namespace certiglobe
