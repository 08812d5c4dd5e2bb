#include "certiglobe/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace certiglobe {

const std::vector<double>& property_epsilon(const SafetySpec& spec) {
  if (std::holds_alternative<RobustnessProperty>(spec.property))
    return std::get<RobustnessProperty>(spec.property).epsilon;
  return std::get<FairnessProperty>(spec.property).epsilon;
}

void validate_spec(const Network& net, const SafetySpec& spec) {
  const std::vector<double>& eps = property_epsilon(spec);
  if (eps.size() != net.num_features())
    throw std::invalid_argument("epsilon has " + std::to_string(eps.size()) + " entries, network has " +
                                std::to_string(net.num_features()) + " features");
  for (double e : eps)
    if (!(e >= 0.0)) throw std::invalid_argument("negative epsilon component");
  if (!(spec.kappa > 0.0 && spec.kappa < 1.0))
    throw std::invalid_argument("kappa must lie in (0, 1)");
  if (!(spec.delta > 0.0 && spec.delta < 0.5))
    throw std::invalid_argument("delta must lie in (0, 0.5)");
  if (const auto* fair = std::get_if<FairnessProperty>(&spec.property)) {
    if (fair->sensitive.empty()) throw std::invalid_argument("fairness needs a sensitive feature");
    for (std::size_t f : fair->sensitive) {
      if (f >= net.num_features()) throw std::invalid_argument("sensitive feature index out of range");
      if (!std::holds_alternative<CategoricalFeature>(net.feature(f)))
        throw std::invalid_argument("sensitive feature " + std::to_string(f) +
                                    " is real-valued; fairness distance requires a categorical feature");
    }
  }
}

ProductVars encode_product(ConstraintSystem& sys, const Network& net) {
  ProductVars vars;
  for (std::size_t copy = 0; copy < 2; ++copy) {
    const std::string prime = copy == 0 ? "" : "'";
    auto& inputs = vars.inputs[copy];
    for (std::size_t c = 0; c < net.input_dim(); ++c)
      inputs.push_back(sys.add_var(net.column_lower(c), net.column_upper(c),
                                   "x" + prime + std::to_string(c)));

    // one-hot structure of categorical features
    for (std::size_t f = 0; f < net.num_features(); ++f) {
      const FeatureKind& kind = net.feature(f);
      if (!std::holds_alternative<CategoricalFeature>(kind)) continue;
      const std::size_t card = std::get<CategoricalFeature>(kind).cardinality;
      const std::size_t base = net.feature_column(f);
      LinearEquation sum;
      Disjunction one_hot;
      for (std::size_t v = 0; v < card; ++v) {
        sum.terms.push_back({1.0, inputs[base + v]});
        one_hot.alternatives.push_back({{{1.0, inputs[base + v]}}, Relation::EQ, 1.0});
      }
      sum.rel = Relation::EQ;
      sum.constant = 1.0;
      sys.add_equation(std::move(sum));
      sys.add_disjunction(std::move(one_hot));
    }

    std::vector<VarId> cur = inputs;
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      const Layer& layer = net.layers()[k];
      std::vector<VarId> pre, post;
      for (std::size_t r = 0; r < layer.out_dim; ++r) {
        const VarId p = sys.add_var(-kInfinity, kInfinity,
                                    "n" + prime + std::to_string(k) + "." + std::to_string(r));
        LinearEquation eq;
        for (std::size_t c = 0; c < layer.in_dim; ++c) {
          const double w = layer.weights[r * layer.in_dim + c];
          if (w != 0.0) eq.terms.push_back({w, cur[c]});
        }
        eq.terms.push_back({-1.0, p});
        eq.rel = Relation::EQ;
        eq.constant = -layer.biases[r];
        sys.add_equation(std::move(eq));
        pre.push_back(p);
        if (layer.activation == Activation::ReLU) {
          const VarId q = sys.add_var(0.0, kInfinity,
                                      "r" + prime + std::to_string(k) + "." + std::to_string(r));
          sys.add_relu(p, q);
          post.push_back(q);
        } else {
          post.push_back(p);
        }
      }
      vars.pre[copy].push_back(pre);
      vars.post[copy].push_back(post);
      cur = post;
    }
    vars.logits[copy] = cur;
  }
  return vars;
}

void encode_cond(ConstraintSystem& sys, const Network& net, const SafetySpec& spec,
                 const ProductVars& vars) {
  const std::vector<double>& eps = property_epsilon(spec);
  const auto* fair = std::get_if<FairnessProperty>(&spec.property);

  auto is_sensitive = [&](std::size_t f) {
    if (!fair) return false;
    for (std::size_t s : fair->sensitive)
      if (s == f) return true;
    return false;
  };

  for (std::size_t f = 0; f < net.num_features(); ++f) {
    const FeatureKind& kind = net.feature(f);
    const std::size_t base = net.feature_column(f);

    if (is_sensitive(f)) {
      // d(x_s, x'_s) > 0: some one-hot column flips from 1 to 0
      const std::size_t card = std::get<CategoricalFeature>(kind).cardinality;
      Disjunction differ;
      for (std::size_t v = 0; v < card; ++v)
        differ.alternatives.push_back(
            {{{1.0, vars.inputs[0][base + v]}, {-1.0, vars.inputs[1][base + v]}}, Relation::EQ, 1.0});
      sys.add_disjunction(std::move(differ));
      continue;
    }

    if (std::holds_alternative<RealFeature>(kind)) {
      const double e = eps[f];
      if (e == 0.0) {
        sys.add_equation({{{1.0, vars.inputs[0][base]}, {-1.0, vars.inputs[1][base]}}, Relation::EQ, 0.0});
      } else {
        sys.add_equation({{{1.0, vars.inputs[0][base]}, {-1.0, vars.inputs[1][base]}}, Relation::LE, e});
        sys.add_equation({{{1.0, vars.inputs[1][base]}, {-1.0, vars.inputs[0][base]}}, Relation::LE, e});
      }
    } else {
      // categorical: the 0/1 distance makes any tolerance below 1 an equality;
      // non-sensitive fairness features are pinned to 1/2
      const double e = fair ? 0.5 : eps[f];
      if (e >= 1.0) continue;
      const std::size_t card = std::get<CategoricalFeature>(kind).cardinality;
      for (std::size_t v = 0; v < card; ++v)
        sys.add_equation(
            {{{1.0, vars.inputs[0][base + v]}, {-1.0, vars.inputs[1][base + v]}}, Relation::EQ, 0.0});
    }
  }
}

ConfidenceVars encode_confidence_value(ConstraintSystem& sys, const Network& net,
                                       const PwlSigmoid& pwl, const ProductVars& vars,
                                       std::size_t copy) {
  const std::size_t n = net.output_dim();
  const std::vector<VarId>& z = vars.logits[copy];
  const double shift = std::log(static_cast<double>(n - 1));
  const std::vector<SigmoidSegment> segments(pwl.segments().begin(), pwl.segments().end());

  ConfidenceVars cv;
  cv.delta = pwl.delta();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<VarId> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(z[j]);
    const VarId m = sys.add_var(-kInfinity, kInfinity, "m" + std::to_string(i));
    sys.add_max(m, std::move(others));

    const VarId t = sys.add_var(-kInfinity, kInfinity, "t" + std::to_string(i));
    sys.add_equation({{{1.0, t}, {-1.0, z[i]}, {1.0, m}}, Relation::EQ, -shift});
    cv.shifted.push_back(t);

    const VarId s = sys.add_var(0.0, 1.0, "s" + std::to_string(i));
    lower_segmented(sys, SegmentedFunction{t, s, segments});
    cv.scores.push_back(s);
  }
  cv.conf = sys.add_var(0.0, 1.0, "conf");
  sys.add_max(cv.conf, cv.scores);
  return cv;
}

void add_confidence_threshold(ConstraintSystem& sys, const ConfidenceVars& cv, double threshold) {
  if (!(threshold > 0.5 && threshold < 1.0))
    throw std::invalid_argument("confidence threshold outside (1/2, 1)");
  sys.add_equation({{{1.0, cv.conf}}, Relation::GT, threshold + cv.delta});
}

void encode_class_disequality(ConstraintSystem& sys, const ProductVars& vars,
                              std::size_t class_index, DisequalityBranch branch) {
  const std::size_t n = vars.logits[0].size();
  if (class_index >= n) throw std::out_of_range("class index out of range");

  const VarId cmax = sys.add_var(-kInfinity, kInfinity, "cmax");
  sys.add_max(cmax, vars.logits[0]);
  sys.add_equation({{{1.0, cmax}, {-1.0, vars.logits[0][class_index]}}, Relation::EQ, 0.0});

  const VarId cmaxp = sys.add_var(-kInfinity, kInfinity, "cmax'");
  sys.add_max(cmaxp, vars.logits[1]);
  sys.add_equation({{{1.0, cmaxp}, {-1.0, vars.logits[1][class_index]}},
                    branch == DisequalityBranch::Greater ? Relation::GT : Relation::LT, 0.0});
}

QueryFamily build_query_family(const Network& net, const SafetySpec& spec, const PwlSigmoid& pwl,
                               double adjusted_threshold, bool fidelity_two_query) {
  validate_spec(net, spec);
  QueryFamily family;
  family.threshold = adjusted_threshold;
  std::vector<DisequalityBranch> branches{DisequalityBranch::Greater};
  if (fidelity_two_query) branches.push_back(DisequalityBranch::Less);

  for (std::size_t i = 0; i < net.output_dim(); ++i) {
    for (const DisequalityBranch branch : branches) {
      EncodedQuery q;
      q.class_index = i;
      q.branch = branch;
      q.vars = encode_product(q.system, net);
      encode_cond(q.system, net, spec, q.vars);
      q.confidence = encode_confidence_value(q.system, net, pwl, q.vars, 0);
      add_confidence_threshold(q.system, q.confidence, adjusted_threshold);
      encode_class_disequality(q.system, q.vars, i, branch);
      family.queries.push_back(std::move(q));
    }
  }
  return family;
}

}  // namespace certiglobe
