#pragma once

// Test-only oracles, independent of the library's evaluation paths.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "certiglobe/network.hpp"

namespace certiglobe::testing {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Straight-line network evaluator written independently of eval_logits:
/// explicit index arithmetic, no layer abstraction reuse.
inline std::vector<double> straight_line_eval(const Network& net, const std::vector<double>& x) {
  std::vector<double> values = x;
  const auto& layers = net.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const std::size_t rows = layers[li].out_dim;
    const std::size_t cols = layers[li].in_dim;
    std::vector<double> next(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += layers[li].weights[r * cols + c] * values[c];
      s += layers[li].biases[r];
      if (li + 1 < layers.size() && s < 0.0) s = 0.0;
      next[r] = s;
    }
    values = next;
  }
  return values;
}

/// softmax([2, 1, 0.5]) computed with 40-digit decimal arithmetic and frozen.
inline constexpr double kSoftmax_2_1_05[3] = {0.62853171921176244825, 0.23122389762214906723,
                                              0.14024438316608848452};

inline std::vector<double> random_input(const Network& net, std::mt19937_64& rng) {
  std::vector<double> x(net.input_dim(), 0.0);
  for (std::size_t f = 0; f < net.num_features(); ++f) {
    const FeatureKind& kind = net.feature(f);
    const std::size_t col = net.feature_column(f);
    if (std::holds_alternative<RealFeature>(kind)) {
      const auto& r = std::get<RealFeature>(kind);
      x[col] = uniform(rng, r.lo, r.hi);
    } else {
      const std::size_t card = std::get<CategoricalFeature>(kind).cardinality;
      x[col + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(card)) % card] = 1.0;
    }
  }
  return x;
}

}  // namespace certiglobe::testing
