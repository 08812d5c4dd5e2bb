#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "certiglobe/sigmoid.hpp"

namespace certiglobe {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Feasibility tolerance of the certificate checker (eval_assignment).
inline constexpr double kCheckTolerance = 1e-7;

struct VarId {
  std::size_t index = 0;
  auto operator<=>(const VarId&) const = default;
};

enum class Relation { LE, GE, EQ, LT, GT };

struct LinearTerm {
  double coef = 0.0;
  VarId var;
};

/// Sum of terms related to a constant: sum {coef * var} rel constant.
/// LT/GT extend the base grammar; the solver realizes them through a
/// configurable strictness slack.
struct LinearEquation {
  std::vector<LinearTerm> terms;
  Relation rel = Relation::EQ;
  double constant = 0.0;
};

struct ReluConstraint {
  VarId in, out;  ///< out = max(0, in)
};

struct MaxConstraint {
  VarId out;
  std::vector<VarId> inputs;  ///< out = max(inputs), at least one
};

struct AbsConstraint {
  VarId in, out;  ///< out = |in|
};

using PwlConstraint = std::variant<ReluConstraint, MaxConstraint, AbsConstraint>;

/// Non-empty list of alternatives, at least one of which must hold.
struct Disjunction {
  std::vector<LinearEquation> alternatives;
};

/// Sugar for out = sig_hat(in); lowered to Max/Min-of-affine constraints.
struct SegmentedFunction {
  VarId in, out;
  std::vector<SigmoidSegment> segments;
};

/// Piecewise-linear constraint system: variables with box bounds, linear
/// equations, ReLU/Max/Abs constraints and disjunctions. Built single
/// threaded, then treated as immutable.
class ConstraintSystem {
 public:
  VarId add_var(double lo, double hi, std::string name = {});
  void set_bounds(VarId v, double lo, double hi);
  /// Intersects the current box of `v` with [lo, hi].
  void tighten_bounds(VarId v, double lo, double hi);

  void add_equation(LinearEquation eq);
  void add_relu(VarId in, VarId out);
  void add_max(VarId out, std::vector<VarId> inputs);
  void add_abs(VarId in, VarId out);
  void add_disjunction(Disjunction d);

  std::size_t num_vars() const { return lower_.size(); }
  double lower(VarId v) const { return lower_[v.index]; }
  double upper(VarId v) const { return upper_[v.index]; }
  const std::string& name(VarId v) const { return names_[v.index]; }
  const std::vector<LinearEquation>& equations() const { return equations_; }
  const std::vector<PwlConstraint>& pwl() const { return pwl_; }
  const std::vector<Disjunction>& disjunctions() const { return disjunctions_; }

 private:
  std::vector<double> lower_, upper_;
  std::vector<std::string> names_;
  std::vector<LinearEquation> equations_;
  std::vector<PwlConstraint> pwl_;
  std::vector<Disjunction> disjunctions_;
};

struct Violation {
  std::string message;
};

/// Checks all structural invariants; returns an empty list when well-formed.
std::vector<Violation> validate(const ConstraintSystem& system);

struct CheckResult {
  bool ok = false;
  std::string first_failure;
};

/// True iff every bound, equation, PWL relation and disjunction holds on the
/// full assignment, within `tol`. Strict relations are checked with the same
/// tolerance as their non-strict counterparts.
CheckResult eval_assignment(const ConstraintSystem& system, std::span<const double> assignment,
                            double tol = kCheckTolerance);

/// Expands out = sig_hat(in) into the convex-split min/max encoding:
///   S1 = min(max(0, lower-piece lines), 1/2)
///   S2 = max(min(1, upper-piece lines), 1/2)
///   out = S1 + S2 - 1/2
/// (Min is lowered through Max by negation.) Requires segments that are
/// sorted, contiguous, split at x = 0, continuous, convex left of 0 and
/// concave right of it, with end values exactly 0 and 1 - the shape
/// remez_sigmoid produces. The lowered value then equals sig_hat pointwise
/// for every real input, including the clamp regions.
void lower_segmented(ConstraintSystem& system, const SegmentedFunction& sf);

/// One constraint per line, stable ordering; see docs/constraint-format.md.
void dump_system(const ConstraintSystem& system, std::ostream& os);
ConstraintSystem load_system(std::istream& is);

}  // namespace certiglobe
