#include "certiglobe/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "certiglobe/encoder.hpp"
#include "certiglobe/network.hpp"
#include "certiglobe/sigmoid.hpp"
#include "certiglobe/solver.hpp"
#include "certiglobe/verifier.hpp"

namespace certiglobe::cli {

namespace {

constexpr int kExitSafe = 0;
constexpr int kExitViolated = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 3;
constexpr int kExitIo = 4;

Network load_or_throw(const RunConfig& cfg) {
  if (cfg.network_path.empty()) throw std::invalid_argument("--network is required");
  return load_network(cfg.network_path);
}

std::vector<double> resolve_epsilon(const RunConfig& cfg, const Network& net) {
  if (!cfg.epsilon_file.empty()) {
    std::ifstream in(cfg.epsilon_file);
    if (!in) throw std::runtime_error("cannot open epsilon file " + cfg.epsilon_file);
    std::vector<double> eps;
    double v = 0.0;
    while (in >> v) eps.push_back(v);
    if (eps.size() != net.num_features())
      throw std::invalid_argument("epsilon file has " + std::to_string(eps.size()) +
                                  " entries, network has " + std::to_string(net.num_features()) +
                                  " features");
    return eps;
  }
  if (!cfg.epsilon_scalar) throw std::invalid_argument("--epsilon is required");
  return std::vector<double>(net.num_features(), *cfg.epsilon_scalar);
}

SafetySpec build_spec(const RunConfig& cfg, const Network& net, double kappa) {
  SafetySpec spec;
  spec.kappa = kappa;
  spec.delta = cfg.delta;
  std::vector<double> eps = resolve_epsilon(cfg, net);
  if (cfg.property == "fairness") {
    if (cfg.sensitive.empty()) throw std::invalid_argument("fairness needs --sensitive");
    spec.property = FairnessProperty{cfg.sensitive, std::move(eps)};
  } else if (cfg.property == "robustness") {
    spec.property = RobustnessProperty{std::move(eps)};
  } else {
    throw std::invalid_argument("unknown property '" + cfg.property + "'");
  }
  validate_spec(net, spec);
  return spec;
}

VerifyOptions build_options(const RunConfig& cfg) {
  VerifyOptions opts;
  opts.early_exit = !cfg.no_early_exit;
  opts.fidelity_two_query = cfg.fidelity_two_query;
  opts.budget.max_splits = cfg.max_splits;
  opts.budget.max_seconds = cfg.max_seconds;
  opts.trace = cfg.trace;
  return opts;
}

void dump_queries(const RunConfig& cfg, const Network& net, const SafetySpec& spec) {
  if (cfg.dump_queries_dir.empty()) return;
  std::filesystem::create_directories(cfg.dump_queries_dir);
  const double b = error_bound(net.output_dim(), spec.delta);
  const PwlSigmoid pwl = remez_sigmoid(spec.delta);
  const QueryFamily family =
      build_query_family(net, spec, pwl, spec.kappa - b, cfg.fidelity_two_query);
  for (const EncodedQuery& q : family.queries) {
    const std::string name = "query_class" + std::to_string(q.class_index) +
                             (q.branch == DisequalityBranch::Greater ? "_gt" : "_lt") + ".plc";
    std::ofstream out(std::filesystem::path(cfg.dump_queries_dir) / name);
    dump_system(q.system, out);
  }
}

void write_output(const RunConfig& cfg, std::ostream& stdout_stream, const std::string& payload) {
  stdout_stream << payload;
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) throw std::runtime_error("cannot open " + cfg.out_path + " for writing");
    f << payload;
  }
}

}  // namespace

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Network net = load_or_throw(cfg);
    if (!cfg.kappa) throw std::invalid_argument("--kappa is required");
    const SafetySpec spec = build_spec(cfg, net, *cfg.kappa);
    dump_queries(cfg, net, spec);
    const Verdict verdict = verify(net, spec, build_options(cfg));
    write_output(cfg, out, verdict_to_json(verdict, spec) + "\n");
    switch (verdict.status) {
      case VerdictStatus::Safe: return kExitSafe;
      case VerdictStatus::Violated: return kExitViolated;
      case VerdictStatus::Unknown: return kExitUnknown;
    }
    return kExitIo;
  } catch (const GuaranteeUnavailable& e) {
    err << "guarantee unavailable: " << e.what() << "\n";
    return kExitUnknown;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Network net = load_or_throw(cfg);
    if (cfg.sweep_epsilons.empty() || cfg.sweep_kappas.empty())
      throw std::invalid_argument("sweep needs --epsilons and --kappas");
    RunConfig base = cfg;
    if (!base.epsilon_scalar && base.epsilon_file.empty()) base.epsilon_scalar = cfg.sweep_epsilons.front();
    const SafetySpec templ = build_spec(base, net, 0.9);
    const std::vector<SweepCell> cells =
        sweep(net, templ, cfg.sweep_epsilons, cfg.sweep_kappas, build_options(cfg));
    std::ostringstream csv;
    write_sweep_csv(csv, cells);
    write_output(cfg, out, csv.str());
    return kExitSafe;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int cmd_min_confidence(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Network net = load_or_throw(cfg);
    const SafetySpec spec = build_spec(cfg, net, 0.9);  // kappa comes from the search
    const std::optional<double> kmin = min_confidence(net, spec, cfg.granularity, build_options(cfg));
    if (!kmin) {
      out << "not_safe_at_max granularity " << cfg.granularity << "\n";
      return kExitViolated;
    }
    out << "kappa_min " << *kmin << " granularity " << cfg.granularity << "\n";
    return kExitSafe;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int cmd_gen_network(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.out_path.empty()) throw std::invalid_argument("gen-network needs --out");
    std::vector<FeatureKind> features(cfg.gen_inputs, RealFeature{0.0, 1.0});
    for (const auto& [idx, card] : cfg.gen_categorical) {
      if (idx >= features.size()) throw std::invalid_argument("categorical feature index out of range");
      features[idx] = CategoricalFeature{card};
    }
    const Network net =
        generate_network(cfg.seed, features, cfg.gen_outputs, cfg.gen_hidden, cfg.gen_weight_scale);
    save_network(net, cfg.out_path);
    out << "wrote " << cfg.out_path << " (inputs " << net.input_dim() << ", outputs "
        << net.output_dim() << ")\n";
    return kExitSafe;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

namespace {

std::pair<std::size_t, std::size_t> parse_categorical(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--categorical expects INDEX:CARDINALITY");
  return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"confidence-based global robustness and fairness verifier for ReLU classifiers"};
  app.require_subcommand(1);

  RunConfig cfg;
  if (const char* log = std::getenv("CERTIGLOBE_LOG")) cfg.trace = std::atoi(log);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--network", cfg.network_path, "network file");
    cmd->add_option("--property", cfg.property, "robustness|fairness");
    cmd->add_option("--epsilon", cfg.epsilon_scalar, "tolerance, broadcast over features");
    cmd->add_option("--epsilon-file", cfg.epsilon_file, "per-feature tolerances, one per line");
    cmd->add_option("--sensitive", cfg.sensitive, "sensitive feature indices (fairness)");
    cmd->add_option("--delta", cfg.delta, "sigmoid precision (default 0.005)");
    cmd->add_option("--max-splits", cfg.max_splits, "solver split budget");
    cmd->add_option("--max-seconds", cfg.max_seconds, "solver time budget per query");
    cmd->add_flag("--fidelity-two-query", cfg.fidelity_two_query,
                  "also run the vacuous '< 0' disequality branches");
    cmd->add_flag("--no-early-exit", cfg.no_early_exit, "run all class queries");
    cmd->add_option("--out", cfg.out_path, "output file");
  };

  CLI::App* v = app.add_subcommand("verify", "decide the 2-safety property at --kappa");
  add_common(v);
  v->add_option("--kappa", cfg.kappa, "confidence threshold");
  v->add_option("--dump-queries", cfg.dump_queries_dir, "dump the encoded query family to DIR");

  CLI::App* s = app.add_subcommand("sweep", "verify over an epsilon x kappa grid, emit CSV");
  add_common(s);
  s->add_option("--epsilons", cfg.sweep_epsilons, "epsilon grid values")->delimiter(',');
  s->add_option("--kappas", cfg.sweep_kappas, "kappa grid values")->delimiter(',');

  CLI::App* m = app.add_subcommand("min-confidence", "synthesize the minimal safe kappa");
  add_common(m);
  m->add_option("--granularity", cfg.granularity, "kappa grid step (default 0.05)");

  CLI::App* g = app.add_subcommand("gen-network", "generate a seeded fixture network");
  g->add_option("--seed", cfg.seed, "RNG seed");
  g->add_option("--inputs", cfg.gen_inputs, "number of features");
  g->add_option("--outputs", cfg.gen_outputs, "number of classes");
  g->add_option("--hidden", cfg.gen_hidden, "hidden layer sizes")->delimiter(',');
  g->add_option("--weight-scale", cfg.gen_weight_scale, "weight magnitude scale");
  std::vector<std::string> categorical;
  g->add_option("--categorical", categorical, "INDEX:CARDINALITY, may repeat");
  g->add_option("--out", cfg.out_path, "output network file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (const std::string& c : categorical) cfg.gen_categorical.push_back(parse_categorical(c));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  if (v->parsed()) return cmd_verify(cfg, std::cout, std::cerr);
  if (s->parsed()) return cmd_sweep(cfg, std::cout, std::cerr);
  if (m->parsed()) return cmd_min_confidence(cfg, std::cout, std::cerr);
  if (g->parsed()) return cmd_gen_network(cfg, std::cout, std::cerr);
  return kExitUsage;
}

}  // namespace certiglobe::cli
