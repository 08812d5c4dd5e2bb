#include "certiglobe/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "certiglobe/sigmoid.hpp"

namespace certiglobe {

GuaranteeUnavailable::GuaranteeUnavailable(double kappa, double bound)
    : std::runtime_error("kappa - b = " + std::to_string(kappa - bound) +
                         " <= 1/2: the soundness guarantee needs kappa > " +
                         std::to_string(0.5 + bound)),
      kappa_(kappa),
      bound_(bound) {}

namespace {

constexpr double kDecodeDrift = 1e-4;  // permitted witness snap distance

double clamp_with_guard(double v, double lo, double hi, const char* what) {
  const double c = std::clamp(v, lo, hi);
  if (std::fabs(c - v) > kDecodeDrift)
    throw std::runtime_error(std::string("witness decode drift on ") + what);
  return c;
}

/// Reads the two input vectors out of a certificate and snaps them onto the
/// exact feature space: box bounds, bit-exact one-hot columns, and cond
/// satisfied exactly (not merely within the LP tolerance).
void decode_witness(const Network& net, const SafetySpec& spec, const EncodedQuery& q,
                    const std::vector<double>& assignment, std::vector<double>& x,
                    std::vector<double>& x_prime) {
  x.resize(net.input_dim());
  x_prime.resize(net.input_dim());
  for (std::size_t c = 0; c < net.input_dim(); ++c) {
    x[c] = assignment[q.vars.inputs[0][c].index];
    x_prime[c] = assignment[q.vars.inputs[1][c].index];
  }

  const std::vector<double>& eps = property_epsilon(spec);
  const auto* fair = std::get_if<FairnessProperty>(&spec.property);
  auto is_sensitive = [&](std::size_t f) {
    return fair && std::find(fair->sensitive.begin(), fair->sensitive.end(), f) != fair->sensitive.end();
  };

  for (std::size_t f = 0; f < net.num_features(); ++f) {
    const FeatureKind& kind = net.feature(f);
    const std::size_t base = net.feature_column(f);
    if (std::holds_alternative<RealFeature>(kind)) {
      const auto& r = std::get<RealFeature>(kind);
      x[base] = clamp_with_guard(x[base], r.lo, r.hi, "x");
      x_prime[base] = clamp_with_guard(x_prime[base], r.lo, r.hi, "x'");
      const double e = eps[f];
      if (e == 0.0)
        x_prime[base] = x[base];
      else
        x_prime[base] = clamp_with_guard(x_prime[base], x[base] - e, x[base] + e, "cond");
    } else {
      const std::size_t card = std::get<CategoricalFeature>(kind).cardinality;
      for (std::size_t v = 0; v < card; ++v) {
        x[base + v] = clamp_with_guard(x[base + v] < 0.5 ? 0.0 : 1.0,
                                       x[base + v] - kDecodeDrift, x[base + v] + kDecodeDrift, "one-hot");
        x_prime[base + v] = clamp_with_guard(x_prime[base + v] < 0.5 ? 0.0 : 1.0,
                                             x_prime[base + v] - kDecodeDrift,
                                             x_prime[base + v] + kDecodeDrift, "one-hot'");
      }
      const bool must_equal = !is_sensitive(f) && (fair || eps[f] < 1.0);
      if (must_equal)
        for (std::size_t v = 0; v < card; ++v)
          if (x[base + v] != x_prime[base + v]) throw std::runtime_error("witness violates cond equality");
      if (is_sensitive(f)) {
        bool differs = false;
        for (std::size_t v = 0; v < card; ++v) differs |= x[base + v] != x_prime[base + v];
        if (!differs) throw std::runtime_error("witness does not flip the sensitive feature");
      }
    }
  }
}

Verdict verify_with_pwl(const Network& net, const SafetySpec& spec, const PwlSigmoid& pwl,
                        const VerifyOptions& opts) {
  validate_spec(net, spec);
  const double b = error_bound(net.output_dim(), spec.delta);
  const double adjusted = spec.kappa - b;
  if (!(adjusted > 0.5)) throw GuaranteeUnavailable(spec.kappa, b);

  Verdict verdict;
  verdict.kappa = spec.kappa;
  verdict.delta = spec.delta;
  verdict.adjusted_threshold = adjusted;

  QueryFamily family = build_query_family(net, spec, pwl, adjusted, opts.fidelity_two_query);

  bool saw_unknown = false;
  bool done = false;
  for (EncodedQuery& q : family.queries) {
    QueryStat stat;
    stat.class_index = q.class_index;
    stat.branch = q.branch;
    if (done) {
      stat.status = "skipped";
      verdict.per_query.push_back(std::move(stat));
      continue;
    }

    SolveOptions sopts;
    sopts.budget = opts.budget;
    sopts.strict_slack = opts.strict_slack;
    sopts.trace = opts.trace;
    if (opts.improve_witness) sopts.maximize = q.confidence.conf;

    const SolveResult res = solve(q.system, sopts);
    stat.time_ms = res.stats.wall_seconds * 1000.0;
    stat.splits = res.stats.splits;
    stat.lp_pivots = res.stats.lp_pivots;

    switch (res.status) {
      case SolveStatus::Infeasible:
        stat.status = "unsat";
        break;
      case SolveStatus::BudgetExhausted:
        stat.status = "unknown";
        saw_unknown = true;
        break;
      case SolveStatus::Feasible: {
        stat.status = "sat";
        std::vector<double> x, x_prime;
        decode_witness(net, spec, q, res.assignment, x, x_prime);
        verdict.witness = classify_counterexample(net, x, x_prime, spec.kappa, b);
        verdict.status = VerdictStatus::Violated;
        if (opts.early_exit) done = true;
        break;
      }
    }
    verdict.per_query.push_back(std::move(stat));
  }

  if (verdict.status != VerdictStatus::Violated)
    verdict.status = saw_unknown ? VerdictStatus::Unknown : VerdictStatus::Safe;
  return verdict;
}

}  // namespace

Verdict verify(const Network& net, const SafetySpec& spec, const VerifyOptions& options) {
  const PwlSigmoid pwl = remez_sigmoid(spec.delta);
  return verify_with_pwl(net, spec, pwl, options);
}

CexReport classify_counterexample(const Network& net, std::span<const double> x,
                                  std::span<const double> x_prime, double kappa,
                                  double error_bound) {
  CexReport report;
  report.x.assign(x.begin(), x.end());
  report.x_prime.assign(x_prime.begin(), x_prime.end());
  report.class_x = class_of(net, x);
  report.class_x_prime = class_of(net, x_prime);
  report.conf_exact = conf(net, x);

  const bool classes_differ = report.class_x != report.class_x_prime;
  if (report.conf_exact > kappa && classes_differ) {
    report.classification = Classification::CertainViolation;
  } else {
    report.classification = Classification::Indeterminate;
    // a class-changing witness still certifies violation below its exact
    // confidence; otherwise only the worst-case interval remains
    report.interval_lo = classes_differ ? report.conf_exact : kappa - error_bound;
    report.interval_hi = kappa;
  }
  return report;
}

SafetySpec spec_with(const SafetySpec& spec_template, double epsilon_scalar, double kappa) {
  SafetySpec spec = spec_template;
  spec.kappa = kappa;
  if (auto* rob = std::get_if<RobustnessProperty>(&spec.property))
    rob->epsilon.assign(rob->epsilon.size(), epsilon_scalar);
  else
    std::get<FairnessProperty>(spec.property).epsilon.assign(property_epsilon(spec_template).size(),
                                                             epsilon_scalar);
  return spec;
}

std::optional<double> min_confidence(const Network& net, const SafetySpec& spec, double granularity,
                                     const VerifyOptions& options) {
  if (!(granularity > 0.0)) throw std::invalid_argument("granularity must be positive");
  const double b = error_bound(net.output_dim(), spec.delta);
  const double floor = 0.5 + b;

  // admissible grid points k*granularity in (floor, 1)
  long k_min = static_cast<long>(std::floor(floor / granularity)) + 1;
  while (k_min * granularity <= floor + 1e-12) ++k_min;
  long k_max = static_cast<long>(std::ceil(1.0 / granularity)) - 1;
  while (k_max * granularity >= 1.0 - 1e-12) --k_max;
  if (k_min > k_max) return std::nullopt;

  const PwlSigmoid pwl = remez_sigmoid(spec.delta);
  auto safe_at = [&](long k) {
    SafetySpec probe = spec;
    probe.kappa = k * granularity;
    return verify_with_pwl(net, probe, pwl, options).status == VerdictStatus::Safe;
  };

  if (!safe_at(k_max)) return std::nullopt;
  long lo = k_min, hi = k_max;
  while (lo < hi) {
    const long mid = lo + (hi - lo) / 2;
    if (safe_at(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return hi * granularity;
}

std::vector<SweepCell> sweep(const Network& net, const SafetySpec& spec_template,
                             const std::vector<double>& epsilons, const std::vector<double>& kappas,
                             const VerifyOptions& options) {
  if (epsilons.empty() || kappas.empty()) throw std::invalid_argument("empty sweep grid");
  const PwlSigmoid pwl = remez_sigmoid(spec_template.delta);

  std::vector<SweepCell> cells(epsilons.size() * kappas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const double eps = epsilons[i / kappas.size()];
      const double kappa = kappas[i % kappas.size()];
      SweepCell& cell = cells[i];
      cell.epsilon = eps;
      cell.kappa = kappa;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const Verdict v = verify_with_pwl(net, spec_with(spec_template, eps, kappa), pwl, options);
        cell.status = v.status == VerdictStatus::Safe       ? "safe"
                      : v.status == VerdictStatus::Violated ? "violated"
                                                            : "unknown";
      } catch (const GuaranteeUnavailable&) {
        cell.status = "guarantee_unavailable";
      } catch (const std::exception&) {
        cell.status = "error";
      }
      const auto t1 = std::chrono::steady_clock::now();
      cell.time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  };

  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t nthreads = std::min(hw, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return cells;
}

std::string verdict_to_json(const Verdict& verdict, const SafetySpec& spec) {
  nlohmann::json j;
  j["property"] = std::holds_alternative<RobustnessProperty>(spec.property) ? "robustness" : "fairness";
  j["epsilon"] = property_epsilon(spec);
  if (const auto* fair = std::get_if<FairnessProperty>(&spec.property)) j["sensitive"] = fair->sensitive;
  j["kappa"] = verdict.kappa;
  j["delta"] = verdict.delta;
  j["adjusted_threshold"] = verdict.adjusted_threshold;
  j["status"] = verdict.status == VerdictStatus::Safe       ? "safe"
                : verdict.status == VerdictStatus::Violated ? "violated"
                                                            : "unknown";
  if (verdict.witness) {
    const CexReport& w = *verdict.witness;
    nlohmann::json jw;
    jw["x"] = w.x;
    jw["x_prime"] = w.x_prime;
    jw["class_x"] = w.class_x;
    jw["class_x_prime"] = w.class_x_prime;
    jw["conf_exact"] = w.conf_exact;
    jw["classification"] = w.classification == Classification::CertainViolation
                               ? "certain_violation"
                               : "indeterminate";
    if (w.classification == Classification::Indeterminate)
      jw["interval"] = {w.interval_lo, w.interval_hi};
    j["witness"] = std::move(jw);
  }
  nlohmann::json queries = nlohmann::json::array();
  for (const QueryStat& q : verdict.per_query) {
    nlohmann::json jq;
    jq["class"] = q.class_index;
    jq["branch"] = q.branch == DisequalityBranch::Greater ? "greater" : "less";
    jq["status"] = q.status;
    jq["time_ms"] = q.time_ms;
    jq["splits"] = q.splits;
    jq["lp_pivots"] = q.lp_pivots;
    queries.push_back(std::move(jq));
  }
  j["per_query"] = std::move(queries);
  return j.dump(2);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "epsilon,kappa,status,time_ms\n";
  char buf[96];
  for (const SweepCell& c : cells) {
    std::snprintf(buf, sizeof(buf), "%g,%g,%s,%.3f\n", c.epsilon, c.kappa, c.status.c_str(),
                  c.time_ms);
    os << buf;
  }
}

}  // namespace certiglobe
