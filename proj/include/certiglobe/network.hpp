#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace certiglobe {

enum class Activation { ReLU, Identity };

/// One fully-connected layer: y = activation(W x + b).
struct Layer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;  ///< row-major, out_dim x in_dim
  std::vector<double> biases;   ///< out_dim
  Activation activation = Activation::ReLU;
};

/// Real-valued input feature, one input column bounded by [lo, hi].
struct RealFeature {
  double lo = 0.0;
  double hi = 1.0;
};

/// Categorical input feature, one-hot encoded over `cardinality` columns.
struct CategoricalFeature {
  std::size_t cardinality = 2;
};

using FeatureKind = std::variant<RealFeature, CategoricalFeature>;

std::size_t feature_width(const FeatureKind& kind);

/// Thrown when a serialized network or constraint file is malformed.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Feed-forward ReLU classifier with a softmax head.
///
/// Hidden layers use ReLU and the final affine layer is identity; softmax,
/// confidence and class are computed by the free functions below, not stored
/// as a layer. Instances are immutable after construction and safe to share
/// across threads.
class Network {
 public:
  Network(std::vector<Layer> layers, std::vector<FeatureKind> features);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t num_features() const { return features_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const FeatureKind& feature(std::size_t i) const { return features_[i]; }
  const std::vector<FeatureKind>& features() const { return features_; }

  /// First input column of feature `i`; columns follow feature order.
  std::size_t feature_column(std::size_t i) const { return columns_[i]; }

  /// Box bounds of input column `c` ([0, 1] for one-hot columns).
  double column_lower(std::size_t c) const;
  double column_upper(std::size_t c) const;

  /// Index of the feature that owns input column `c`.
  std::size_t column_feature(std::size_t c) const;

 private:
  std::vector<Layer> layers_;
  std::vector<FeatureKind> features_;
  std::vector<std::size_t> columns_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
};

/// Pre-softmax outputs obtained by alternating affine maps and ReLU.
std::vector<double> eval_logits(const Network& net, std::span<const double> x);

/// Numerically stable softmax (max-subtraction); components sum to 1.
std::vector<double> softmax(std::span<const double> z);

/// Highest softmax probability of the classification of `x`.
double conf(const Network& net, std::span<const double> x);

/// 0-based argmax class; exact ties break to the lowest index.
std::size_t class_of(const Network& net, std::span<const double> x);

std::size_t argmax_lowest(std::span<const double> v);

/// Reproducible pseudo-random network; the same seed yields a bit-identical
/// network. Weights are drawn from a scaled Bates(3) rule and always lie
/// within +/- 3 * weight_scale.
Network generate_network(std::uint64_t seed, std::size_t num_inputs, std::size_t num_classes,
                         const std::vector<std::size_t>& hidden_sizes, double weight_scale);
Network generate_network(std::uint64_t seed, const std::vector<FeatureKind>& features,
                         std::size_t num_classes, const std::vector<std::size_t>& hidden_sizes,
                         double weight_scale);

/// Textual serialization, lossless for all fields (17 significant digits).
/// The format is documented in docs/network-format.md.
std::string to_text(const Network& net);
Network network_from_text(const std::string& text);

void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace certiglobe
