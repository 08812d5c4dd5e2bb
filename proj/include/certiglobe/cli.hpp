#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace certiglobe::cli {

/// Parsed command-line configuration. Cross-field requirements are checked
/// by the command implementations before any work happens.
struct RunConfig {
  std::string network_path;
  std::string property = "robustness";
  std::optional<double> epsilon_scalar;
  std::string epsilon_file;
  std::vector<std::size_t> sensitive;
  std::optional<double> kappa;
  double delta = 0.005;
  double granularity = 0.05;
  std::vector<double> sweep_epsilons, sweep_kappas;
  std::uint64_t seed = 1;
  bool fidelity_two_query = false;
  bool no_early_exit = false;
  std::string out_path;
  std::string dump_queries_dir;
  int trace = 0;
  std::size_t max_splits = std::numeric_limits<std::size_t>::max();
  double max_seconds = std::numeric_limits<double>::infinity();

  // gen-network
  std::size_t gen_inputs = 2;
  std::size_t gen_outputs = 2;
  std::vector<std::size_t> gen_hidden{4};
  double gen_weight_scale = 1.0;
  /// (feature index, cardinality) overrides turning real features categorical
  std::vector<std::pair<std::size_t, std::size_t>> gen_categorical;
};

// Exit codes: 0 safe, 1 violated / not-safe-at-max, 2 unknown or guarantee
// unavailable, 3 usage error, 4 I/O or internal error.
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_min_confidence(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_gen_network(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full argv entry point (CLI11 parsing plus dispatch).
int run(int argc, const char* const* argv);

}  // namespace certiglobe::cli
