#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "certiglobe/encoder.hpp"
#include "certiglobe/network.hpp"
#include "certiglobe/solver.hpp"

namespace certiglobe {

enum class Classification { CertainViolation, Indeterminate };

/// Counterexample report, re-evaluated on the exact network.
struct CexReport {
  std::vector<double> x, x_prime;
  std::size_t class_x = 0, class_x_prime = 0;
  double conf_exact = 0.0;
  Classification classification = Classification::Indeterminate;
  /// Undecidable confidence interval when Indeterminate: the network is
  /// known unsafe below interval_lo and certified only above interval_hi.
  double interval_lo = 0.0, interval_hi = 0.0;
};

enum class VerdictStatus { Safe, Violated, Unknown };

struct QueryStat {
  std::size_t class_index = 0;
  DisequalityBranch branch = DisequalityBranch::Greater;
  std::string status;  ///< "sat", "unsat", "unknown", "skipped"
  double time_ms = 0.0;
  std::size_t splits = 0;
  std::size_t lp_pivots = 0;
};

struct Verdict {
  VerdictStatus status = VerdictStatus::Unknown;
  double kappa = 0.0;
  double delta = 0.0;
  double adjusted_threshold = 0.0;  ///< kappa - error_bound(n, delta)
  std::optional<CexReport> witness;
  std::vector<QueryStat> per_query;
};

/// Raised when kappa - b_{n,delta} <= 1/2: the soundness guarantee is
/// unavailable at this kappa and no verdict is produced.
class GuaranteeUnavailable : public std::runtime_error {
 public:
  GuaranteeUnavailable(double kappa, double bound);
  double kappa() const { return kappa_; }
  double bound() const { return bound_; }

 private:
  double kappa_, bound_;
};

struct VerifyOptions {
  bool early_exit = true;          ///< stop at the first satisfiable query
  bool fidelity_two_query = false; ///< also run the vacuous "< 0" branches
  bool improve_witness = true;     ///< push the witness away from the threshold
  SolveBudget budget;
  double strict_slack = kStrictSlack;
  int trace = 0;
};

/// End-to-end verification of the confidence-based 2-safety property at
/// spec.kappa: encodes the family at the soundness-adjusted threshold and
/// solves it. Safe means every family member is infeasible; Violated carries
/// an exactly re-evaluated witness; Unknown reports budget exhaustion.
Verdict verify(const Network& net, const SafetySpec& spec, const VerifyOptions& options = {});

/// Re-evaluates a witness pair on the exact network and classifies it:
/// CertainViolation when conf(x) > kappa and the exact classes differ,
/// Indeterminate otherwise with the undecidable interval.
CexReport classify_counterexample(const Network& net, std::span<const double> x,
                                  std::span<const double> x_prime, double kappa,
                                  double error_bound);

/// Smallest kappa on the granularity grid that verifies Safe, found by
/// binary search above the guarantee floor max(1/2, 1/2 + b). Returns
/// nullopt when nothing up to the largest grid point below 1 is Safe.
std::optional<double> min_confidence(const Network& net, const SafetySpec& spec,
                                     double granularity = 0.05, const VerifyOptions& options = {});

struct SweepCell {
  double epsilon = 0.0;
  double kappa = 0.0;
  std::string status;  ///< "safe", "violated", "unknown", "guarantee_unavailable", "error"
  double time_ms = 0.0;
};

/// verify() per (epsilon, kappa) grid point with the scalar epsilon
/// broadcast over the template's tolerance vector. Cells run concurrently;
/// failures are recorded per cell and never abort the sweep.
std::vector<SweepCell> sweep(const Network& net, const SafetySpec& spec_template,
                             const std::vector<double>& epsilons, const std::vector<double>& kappas,
                             const VerifyOptions& options = {});

/// Template with every tolerance component replaced by the scalar.
SafetySpec spec_with(const SafetySpec& spec_template, double epsilon_scalar, double kappa);

std::string verdict_to_json(const Verdict& verdict, const SafetySpec& spec);
void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);

}  // namespace certiglobe
