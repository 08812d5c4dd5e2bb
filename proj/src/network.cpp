#include "certiglobe/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace certiglobe {

std::size_t feature_width(const FeatureKind& kind) {
  if (std::holds_alternative<RealFeature>(kind)) return 1;
  return std::get<CategoricalFeature>(kind).cardinality;
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

Network::Network(std::vector<Layer> layers, std::vector<FeatureKind> features)
    : layers_(std::move(layers)), features_(std::move(features)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");

  std::size_t width = 0;
  columns_.reserve(features_.size());
  for (const FeatureKind& f : features_) {
    columns_.push_back(width);
    const std::size_t w = feature_width(f);
    if (w == 0) throw std::invalid_argument("categorical feature with cardinality 0");
    if (std::holds_alternative<RealFeature>(f)) {
      const auto& r = std::get<RealFeature>(f);
      if (!(r.lo <= r.hi)) throw std::invalid_argument("feature bounds inverted");
    }
    width += w;
  }

  input_dim_ = layers_.front().in_dim;
  output_dim_ = layers_.back().out_dim;
  if (width != input_dim_)
    throw std::invalid_argument("feature widths sum to " + std::to_string(width) +
                                ", expected input_dim " + std::to_string(input_dim_));
  if (output_dim_ < 2) throw std::invalid_argument("classifier needs at least 2 outputs");

  std::size_t prev = input_dim_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.in_dim != prev) throw std::invalid_argument("layer dimension chain broken at layer " + std::to_string(k));
    if (l.weights.size() != l.in_dim * l.out_dim) throw std::invalid_argument("weight count mismatch at layer " + std::to_string(k));
    if (l.biases.size() != l.out_dim) throw std::invalid_argument("bias count mismatch at layer " + std::to_string(k));
    const bool last = (k + 1 == layers_.size());
    if (last && l.activation != Activation::Identity)
      throw std::invalid_argument("final layer must have identity activation");
    if (!last && l.activation != Activation::ReLU)
      throw std::invalid_argument("hidden layers must use ReLU");
    for (double w : l.weights)
      if (!std::isfinite(w)) throw std::invalid_argument("non-finite weight");
    for (double b : l.biases)
      if (!std::isfinite(b)) throw std::invalid_argument("non-finite bias");
    prev = l.out_dim;
  }
}

double Network::column_lower(std::size_t c) const {
  const FeatureKind& f = features_[column_feature(c)];
  if (std::holds_alternative<RealFeature>(f)) return std::get<RealFeature>(f).lo;
  return 0.0;
}

double Network::column_upper(std::size_t c) const {
  const FeatureKind& f = features_[column_feature(c)];
  if (std::holds_alternative<RealFeature>(f)) return std::get<RealFeature>(f).hi;
  return 1.0;
}

std::size_t Network::column_feature(std::size_t c) const {
  if (c >= input_dim_) throw std::out_of_range("input column out of range");
  std::size_t i = features_.size();
  while (i > 0 && columns_[i - 1] > c) --i;
  return i - 1;
}

std::vector<double> eval_logits(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) throw std::invalid_argument("input dimension mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite input component");

  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (const Layer& l : net.layers()) {
    next.assign(l.out_dim, 0.0);
    for (std::size_t r = 0; r < l.out_dim; ++r) {
      double acc = l.biases[r];
      const double* row = &l.weights[r * l.in_dim];
      for (std::size_t c = 0; c < l.in_dim; ++c) acc += row[c] * cur[c];
      next[r] = l.activation == Activation::ReLU ? std::max(0.0, acc) : acc;
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("empty logit vector");
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

double conf(const Network& net, std::span<const double> x) {
  const std::vector<double> p = softmax(eval_logits(net, x));
  return *std::max_element(p.begin(), p.end());
}

std::size_t class_of(const Network& net, std::span<const double> x) {
  // argmax of softmax equals argmax of logits (softmax is order-preserving)
  const std::vector<double> z = eval_logits(net, x);
  return argmax_lowest(z);
}

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; avoids the implementation-defined distributions
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double bates3(std::mt19937_64& rng) {
  return 2.0 * (uniform01(rng) + uniform01(rng) + uniform01(rng) - 1.5);  // in [-3, 3]
}

}  // namespace

Network generate_network(std::uint64_t seed, const std::vector<FeatureKind>& features,
                         std::size_t num_classes, const std::vector<std::size_t>& hidden_sizes,
                         double weight_scale) {
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  std::size_t m = 0;
  for (const FeatureKind& f : features) m += feature_width(f);
  if (m == 0) throw std::invalid_argument("zero input dimension");
  for (std::size_t h : hidden_sizes)
    if (h == 0) throw std::invalid_argument("zero hidden layer size");

  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  std::size_t prev = m;
  std::vector<std::size_t> dims(hidden_sizes);
  dims.push_back(num_classes);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    Layer l;
    l.in_dim = prev;
    l.out_dim = dims[k];
    l.activation = (k + 1 == dims.size()) ? Activation::Identity : Activation::ReLU;
    l.weights.resize(l.in_dim * l.out_dim);
    l.biases.resize(l.out_dim);
    for (double& w : l.weights) w = weight_scale * bates3(rng);
    for (double& b : l.biases) b = weight_scale * (2.0 * uniform01(rng) - 1.0);
    prev = dims[k];
    layers.push_back(std::move(l));
  }
  return Network(std::move(layers), features);
}

Network generate_network(std::uint64_t seed, std::size_t num_inputs, std::size_t num_classes,
                         const std::vector<std::size_t>& hidden_sizes, double weight_scale) {
  if (num_inputs == 0) throw std::invalid_argument("zero input dimension");
  std::vector<FeatureKind> features(num_inputs, RealFeature{0.0, 1.0});
  return generate_network(seed, features, num_classes, hidden_sizes, weight_scale);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_text(const Network& net) {
  std::ostringstream os;
  os << "certiglobe-network v1\n";
  os << "input_dim " << net.input_dim() << "\n";
  os << "output_dim " << net.output_dim() << "\n";
  os << "features " << net.num_features() << "\n";
  for (std::size_t i = 0; i < net.num_features(); ++i) {
    const FeatureKind& f = net.feature(i);
    if (std::holds_alternative<RealFeature>(f)) {
      const auto& r = std::get<RealFeature>(f);
      os << "feature real " << fmt(r.lo) << " " << fmt(r.hi) << "\n";
    } else {
      os << "feature categorical " << std::get<CategoricalFeature>(f).cardinality << "\n";
    }
  }
  os << "layers " << net.layers().size() << "\n";
  for (const Layer& l : net.layers()) {
    os << "layer " << (l.activation == Activation::ReLU ? "relu" : "identity") << " " << l.out_dim
       << " " << l.in_dim << "\n";
    os << "weights";
    for (double w : l.weights) os << " " << fmt(w);
    os << "\nbiases";
    for (double b : l.biases) os << " " << fmt(b);
    os << "\n";
  }
  return os.str();
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // next non-empty line as a token stream
  std::istringstream& next(const std::string& expect_key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      tokens_ = std::istringstream(line);
      std::string key;
      tokens_ >> key;
      if (key != expect_key) throw ParseError(lineno_, "expected '" + expect_key + "', got '" + key + "'");
      return tokens_;
    }
    throw ParseError(lineno_, "unexpected end of file, expected '" + expect_key + "'");
  }

  std::size_t lineno() const { return lineno_; }

 private:
  std::istringstream in_;
  std::istringstream tokens_;
  std::size_t lineno_ = 0;
};

template <typename T>
T read_value(std::istringstream& is, std::size_t lineno, const char* what) {
  T v;
  if (!(is >> v)) throw ParseError(lineno, std::string("missing or malformed ") + what);
  return v;
}

}  // namespace

Network network_from_text(const std::string& text) {
  LineReader r(text);
  {
    auto& is = r.next("certiglobe-network");
    const auto version = read_value<std::string>(is, r.lineno(), "version");
    if (version != "v1") throw ParseError(r.lineno(), "unsupported version '" + version + "'");
  }
  const auto input_dim = read_value<std::size_t>(r.next("input_dim"), r.lineno(), "input_dim");
  const auto output_dim = read_value<std::size_t>(r.next("output_dim"), r.lineno(), "output_dim");
  const auto num_features = read_value<std::size_t>(r.next("features"), r.lineno(), "feature count");

  std::vector<FeatureKind> features;
  for (std::size_t i = 0; i < num_features; ++i) {
    auto& is = r.next("feature");
    const auto kind = read_value<std::string>(is, r.lineno(), "feature kind");
    if (kind == "real") {
      RealFeature f;
      f.lo = read_value<double>(is, r.lineno(), "feature lower bound");
      f.hi = read_value<double>(is, r.lineno(), "feature upper bound");
      features.push_back(f);
    } else if (kind == "categorical") {
      CategoricalFeature f;
      f.cardinality = read_value<std::size_t>(is, r.lineno(), "feature cardinality");
      features.push_back(f);
    } else {
      throw ParseError(r.lineno(), "unknown feature kind '" + kind + "'");
    }
  }

  const auto num_layers = read_value<std::size_t>(r.next("layers"), r.lineno(), "layer count");
  std::vector<Layer> layers;
  for (std::size_t k = 0; k < num_layers; ++k) {
    auto& is = r.next("layer");
    Layer l;
    const auto act = read_value<std::string>(is, r.lineno(), "activation");
    if (act == "relu")
      l.activation = Activation::ReLU;
    else if (act == "identity")
      l.activation = Activation::Identity;
    else
      throw ParseError(r.lineno(), "unknown activation '" + act + "'");
    l.out_dim = read_value<std::size_t>(is, r.lineno(), "layer out_dim");
    l.in_dim = read_value<std::size_t>(is, r.lineno(), "layer in_dim");

    auto& ws = r.next("weights");
    l.weights.resize(l.in_dim * l.out_dim);
    for (double& w : l.weights) w = read_value<double>(ws, r.lineno(), "weight");
    auto& bs = r.next("biases");
    l.biases.resize(l.out_dim);
    for (double& b : l.biases) b = read_value<double>(bs, r.lineno(), "bias");
    layers.push_back(std::move(l));
  }

  try {
    Network net(std::move(layers), std::move(features));
    if (net.input_dim() != input_dim)
      throw std::invalid_argument("declared input_dim disagrees with first layer");
    if (net.output_dim() != output_dim)
      throw std::invalid_argument("declared output_dim disagrees with last layer");
    return net;
  } catch (const std::invalid_argument& e) {
    throw ParseError(r.lineno(), e.what());
  }
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_text(net);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return network_from_text(buf.str());
}

}  // namespace certiglobe
