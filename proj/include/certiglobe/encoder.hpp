#pragma once

#include <array>
#include <cstddef>
#include <variant>
#include <vector>

#include "certiglobe/constraints.hpp"
#include "certiglobe/network.hpp"
#include "certiglobe/sigmoid.hpp"

namespace certiglobe {

/// Per-feature closeness tolerances; for categorical features a tolerance
/// below 1 forces equality of the one-hot columns.
struct RobustnessProperty {
  std::vector<double> epsilon;
};

/// Sensitive features must differ while the others stay epsilon-close.
/// Sensitive features have to be categorical; the tolerance of categorical
/// non-sensitive features is pinned to 1/2 (equality).
struct FairnessProperty {
  std::vector<std::size_t> sensitive;
  std::vector<double> epsilon;
};

using PropertyKind = std::variant<RobustnessProperty, FairnessProperty>;

/// A confidence-based 2-safety query: property condition, confidence
/// threshold kappa and sigmoid precision delta.
struct SafetySpec {
  PropertyKind property;
  double kappa = 0.9;
  double delta = 0.005;
};

const std::vector<double>& property_epsilon(const SafetySpec& spec);

/// Throws std::invalid_argument when the spec does not fit the network
/// (epsilon arity, negative tolerances, kappa/delta ranges, non-categorical
/// sensitive features).
void validate_spec(const Network& net, const SafetySpec& spec);

/// Variable map of the self-composed network: copy 0 is the unprimed
/// execution, copy 1 the primed one.
struct ProductVars {
  std::array<std::vector<VarId>, 2> inputs;
  std::array<std::vector<std::vector<VarId>>, 2> pre;   // per layer, pre-activation
  std::array<std::vector<std::vector<VarId>>, 2> post;  // per layer, post-activation
  std::array<std::vector<VarId>, 2> logits;
};

/// Variables of the linearized-softmax confidence encoding.
struct ConfidenceVars {
  VarId conf;                  ///< max_i SigHat(t_i); subtract delta for the certified bound
  std::vector<VarId> shifted;  ///< t_i = z_i - max_{j != i} z_j - log(n-1)
  std::vector<VarId> scores;   ///< s_i = SigHat(t_i)
  double delta = 0.0;
};

enum class DisequalityBranch { Greater, Less };

/// Two disjoint copies of the affine/ReLU constraint chain with inputs boxed
/// by their feature bounds. Categorical features additionally carry a
/// sum-to-one equation and a one-hot disjunction per copy, so every
/// certificate decodes to a valid data point.
ProductVars encode_product(ConstraintSystem& sys, const Network& net);

/// The cond relation between the two copies (robustness or fairness).
void encode_cond(ConstraintSystem& sys, const Network& net, const SafetySpec& spec,
                 const ProductVars& vars);

/// Confidence machinery without the threshold constraint: per class i of
/// `copy`, m_i = Max(z_j, j != i), the shifted input t_i, the lowered
/// sigmoid score s_i and conf = Max(s_1..s_n).
ConfidenceVars encode_confidence_value(ConstraintSystem& sys, const Network& net,
                                       const PwlSigmoid& pwl, const ProductVars& vars,
                                       std::size_t copy = 0);

/// Adds max_i softmax_hat_lower > threshold, with the sigmoid delta folded
/// into the right-hand constant: conf > threshold + delta (strict).
/// threshold must lie in (1/2, 1).
void add_confidence_threshold(ConstraintSystem& sys, const ConfidenceVars& cv, double threshold);

/// Pins class(x) = i on copy 0 (max(z) - z_i = 0) and asserts the chosen
/// disequality branch on copy 1 (max(z') - z'_i > 0, or < 0 under the
/// fidelity mode; the Less branch is vacuously infeasible by Max semantics).
void encode_class_disequality(ConstraintSystem& sys, const ProductVars& vars,
                              std::size_t class_index, DisequalityBranch branch);

struct EncodedQuery {
  ConstraintSystem system;
  std::size_t class_index = 0;
  DisequalityBranch branch = DisequalityBranch::Greater;
  ProductVars vars;
  ConfidenceVars confidence;
};

struct QueryFamily {
  std::vector<EncodedQuery> queries;
  double threshold = 0.0;  ///< the (already adjusted) threshold encoded above
};

/// Assembles product + cond + confidence + per-class disequality, one system
/// per class (two per class when fidelity_two_query restores the literal
/// paper scheme). `adjusted_threshold` is kappa - b_{n,delta}, applied by
/// the caller.
QueryFamily build_query_family(const Network& net, const SafetySpec& spec, const PwlSigmoid& pwl,
                               double adjusted_threshold, bool fidelity_two_query = false);

}  // namespace certiglobe
