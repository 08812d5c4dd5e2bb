#include "certiglobe/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "certiglobe/simplex.hpp"

namespace certiglobe {

namespace {

constexpr double kImproveTol = 1e-9;   // minimum bound improvement worth applying
constexpr double kOutwardPad = 1e-11;  // deduced bounds are padded outward
constexpr double kConflictTol = 1e-9;

LinearEquation rewrite_strict(LinearEquation eq, double tau) {
  if (eq.rel == Relation::LT) {
    eq.rel = Relation::LE;
    eq.constant -= tau;
  } else if (eq.rel == Relation::GT) {
    eq.rel = Relation::GE;
    eq.constant += tau;
  }
  return eq;
}

/// System with strict relations rewritten into the solver's slack form.
struct WorkingSystem {
  const ConstraintSystem* sys = nullptr;
  std::vector<LinearEquation> equations;
  std::vector<Disjunction> disjunctions;
};

WorkingSystem make_working(const ConstraintSystem& sys, double tau) {
  WorkingSystem ws;
  ws.sys = &sys;
  ws.equations.reserve(sys.equations().size());
  for (const LinearEquation& eq : sys.equations()) ws.equations.push_back(rewrite_strict(eq, tau));
  ws.disjunctions.reserve(sys.disjunctions().size());
  for (const Disjunction& d : sys.disjunctions()) {
    Disjunction out;
    for (const LinearEquation& alt : d.alternatives) out.alternatives.push_back(rewrite_strict(alt, tau));
    ws.disjunctions.push_back(std::move(out));
  }
  return ws;
}

struct SearchState {
  std::vector<double> lo, hi;
  std::vector<int> phase;    // per pwl constraint, -1 undetermined
  std::vector<int> dchoice;  // per disjunction, -1 undetermined
};

SearchState initial_state(const WorkingSystem& ws) {
  const ConstraintSystem& sys = *ws.sys;
  SearchState st;
  st.lo.resize(sys.num_vars());
  st.hi.resize(sys.num_vars());
  for (std::size_t v = 0; v < sys.num_vars(); ++v) {
    st.lo[v] = sys.lower(VarId{v});
    st.hi[v] = sys.upper(VarId{v});
  }
  st.phase.assign(sys.pwl().size(), -1);
  st.dchoice.assign(ws.disjunctions.size(), -1);
  return st;
}

struct Interval {
  double lo = 0.0, hi = 0.0;
};

Interval term_range(double coef, double lo, double hi) {
  if (coef == 0.0) return {0.0, 0.0};
  if (coef > 0.0) return {coef * lo, coef * hi};
  return {coef * hi, coef * lo};
}

/// Fixpoint interval propagation over a SearchState.
class Deducer {
 public:
  Deducer(const WorkingSystem& ws, SearchState& st, int trace)
      : ws_(ws), sys_(*ws.sys), st_(st), trace_(trace) {}

  bool conflict() const { return conflict_; }
  const std::string& reason() const { return reason_; }
  std::size_t tightenings() const { return tightenings_; }

  void run(std::size_t max_rounds = 200) {
    for (std::size_t round = 0; round < max_rounds && !conflict_; ++round) {
      changed_ = false;
      for (const LinearEquation& eq : ws_.equations) {
        propagate_equation(eq);
        if (conflict_) return;
      }
      for (std::size_t i = 0; i < sys_.pwl().size(); ++i) {
        std::visit([&](const auto& c) { propagate_pwl(c, st_.phase[i]); }, sys_.pwl()[i]);
        if (conflict_) return;
      }
      for (std::size_t i = 0; i < ws_.disjunctions.size(); ++i) {
        propagate_disjunction(i);
        if (conflict_) return;
      }
      if (!changed_) return;
    }
  }

  /// Alternatives of disjunction `i` not excluded by current intervals.
  std::vector<int> feasible_alternatives(std::size_t i) const {
    std::vector<int> out;
    const auto& alts = ws_.disjunctions[i].alternatives;
    for (std::size_t a = 0; a < alts.size(); ++a)
      if (interval_feasible(alts[a])) out.push_back(static_cast<int>(a));
    return out;
  }

  /// Winner candidates of a Max constraint under current intervals.
  std::vector<int> max_candidates(const MaxConstraint& c) const {
    std::vector<int> out;
    const double out_lo = st_.lo[c.out.index];
    for (std::size_t j = 0; j < c.inputs.size(); ++j)
      if (st_.hi[c.inputs[j].index] >= out_lo - 1e-12) out.push_back(static_cast<int>(j));
    return out;
  }

 private:
  void fail(std::string why) {
    if (!conflict_) {
      conflict_ = true;
      reason_ = std::move(why);
    }
  }

  void tighten_lo(std::size_t v, double val) {
    val -= kOutwardPad;
    if (val > st_.lo[v] + kImproveTol) {
      st_.lo[v] = val;
      changed_ = true;
      ++tightenings_;
      if (trace_ >= 2) std::fprintf(stderr, "[solve] deduce var=%zu lo=%.12g\n", v, val);
      if (st_.lo[v] > st_.hi[v] + kConflictTol)
        fail("empty interval for variable " + std::to_string(v));
    }
  }

  void tighten_hi(std::size_t v, double val) {
    val += kOutwardPad;
    if (val < st_.hi[v] - kImproveTol) {
      st_.hi[v] = val;
      changed_ = true;
      ++tightenings_;
      if (trace_ >= 2) std::fprintf(stderr, "[solve] deduce var=%zu hi=%.12g\n", v, val);
      if (st_.lo[v] > st_.hi[v] + kConflictTol)
        fail("empty interval for variable " + std::to_string(v));
    }
  }

  Interval sum_range(const LinearEquation& eq, std::size_t skip) const {
    Interval acc{0.0, 0.0};
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
      if (i == skip) continue;
      const LinearTerm& t = eq.terms[i];
      const Interval r = term_range(t.coef, st_.lo[t.var.index], st_.hi[t.var.index]);
      acc.lo += r.lo;
      acc.hi += r.hi;
    }
    return acc;
  }

  bool interval_feasible(const LinearEquation& eq) const {
    const Interval s = sum_range(eq, eq.terms.size());
    switch (eq.rel) {
      case Relation::LE:
      case Relation::LT:
        return s.lo <= eq.constant + kConflictTol;
      case Relation::GE:
      case Relation::GT:
        return s.hi >= eq.constant - kConflictTol;
      case Relation::EQ:
        return s.lo <= eq.constant + kConflictTol && s.hi >= eq.constant - kConflictTol;
    }
    return true;
  }

  void propagate_equation(const LinearEquation& eq) {
    if (!interval_feasible(eq)) {
      fail("equation infeasible by intervals");
      return;
    }
    for (std::size_t k = 0; k < eq.terms.size(); ++k) {
      const LinearTerm& t = eq.terms[k];
      if (t.coef == 0.0) continue;
      const Interval rest = sum_range(eq, k);
      // term value t.coef * x must fit in [c - rest.hi, c - rest.lo] (EQ),
      // or one side of it for inequalities
      const bool upper_side = eq.rel == Relation::EQ || eq.rel == Relation::LE || eq.rel == Relation::LT;
      const bool lower_side = eq.rel == Relation::EQ || eq.rel == Relation::GE || eq.rel == Relation::GT;
      const std::size_t v = t.var.index;
      if (upper_side && rest.lo != -kInfinity) {
        const double term_hi = eq.constant - rest.lo;
        if (t.coef > 0.0)
          tighten_hi(v, term_hi / t.coef);
        else
          tighten_lo(v, term_hi / t.coef);
      }
      if (lower_side && rest.hi != kInfinity) {
        const double term_lo = eq.constant - rest.hi;
        if (t.coef > 0.0)
          tighten_lo(v, term_lo / t.coef);
        else
          tighten_hi(v, term_lo / t.coef);
      }
      if (conflict_) return;
    }
  }

  void propagate_pwl(const ReluConstraint& c, int& phase) {
    const std::size_t in = c.in.index, out = c.out.index;
    if (phase < 0) {
      if (st_.lo[in] >= 0.0)
        phase = 1;
      else if (st_.hi[in] <= 0.0)
        phase = 0;
      else if (st_.lo[out] > kConflictTol)
        phase = 1;  // a strictly positive output forces the active phase
    }
    if (phase == 1) {
      tighten_lo(in, std::max(0.0, st_.lo[out]));
      tighten_lo(out, std::max(0.0, st_.lo[in]));
      tighten_hi(in, st_.hi[out]);
      tighten_hi(out, st_.hi[in]);
      tighten_lo(out, 0.0);
      return;
    }
    if (phase == 0) {
      tighten_hi(in, 0.0);
      tighten_lo(out, 0.0);
      tighten_hi(out, 0.0);
      return;
    }
    tighten_lo(out, std::max(0.0, st_.lo[in]));
    tighten_hi(out, std::max(0.0, st_.hi[in]));
    if (st_.hi[out] >= 0.0) tighten_hi(in, st_.hi[out]);
  }

  void propagate_pwl(const AbsConstraint& c, int& phase) {
    const std::size_t in = c.in.index, out = c.out.index;
    if (phase < 0) {
      if (st_.lo[in] >= 0.0)
        phase = 1;
      else if (st_.hi[in] <= 0.0)
        phase = 0;
    }
    if (phase == 1) {
      tighten_lo(in, std::max(0.0, st_.lo[out]));
      tighten_lo(out, std::max(0.0, st_.lo[in]));
      tighten_hi(in, st_.hi[out]);
      tighten_hi(out, st_.hi[in]);
      tighten_lo(out, 0.0);
      return;
    }
    if (phase == 0) {
      // out = -in with in <= 0
      tighten_hi(in, 0.0);
      tighten_lo(in, -st_.hi[out]);
      tighten_hi(in, -st_.lo[out]);
      tighten_lo(out, -st_.hi[in]);
      tighten_hi(out, -st_.lo[in]);
      tighten_lo(out, 0.0);
      return;
    }
    tighten_lo(out, 0.0);
    const double mag = std::max(-st_.lo[in], st_.hi[in]);
    tighten_hi(out, mag);
    tighten_lo(in, -st_.hi[out]);
    tighten_hi(in, st_.hi[out]);
  }

  void propagate_pwl(const MaxConstraint& c, int& phase) {
    const std::size_t out = c.out.index;
    double best_hi = -kInfinity, best_lo = -kInfinity;
    for (VarId in : c.inputs) {
      best_hi = std::max(best_hi, st_.hi[in.index]);
      best_lo = std::max(best_lo, st_.lo[in.index]);
    }
    tighten_hi(out, best_hi);
    tighten_lo(out, best_lo);
    for (VarId in : c.inputs)
      if (st_.hi[in.index] > st_.hi[out]) tighten_hi(in.index, st_.hi[out]);
    if (conflict_) return;

    if (phase < 0) {
      const std::vector<int> cand = max_candidates(c);
      if (cand.empty()) {
        fail("max constraint has no viable winner");
        return;
      }
      if (cand.size() == 1) phase = cand.front();
    }
    if (phase >= 0) {
      const std::size_t win = c.inputs[static_cast<std::size_t>(phase)].index;
      tighten_lo(win, st_.lo[out]);
      tighten_hi(win, st_.hi[out]);
      tighten_lo(out, st_.lo[win]);
      tighten_hi(out, st_.hi[win]);
    }
  }

  void propagate_disjunction(std::size_t i) {
    int& choice = st_.dchoice[i];
    if (choice < 0) {
      const std::vector<int> feas = feasible_alternatives(i);
      if (feas.empty()) {
        fail("disjunction " + std::to_string(i) + " has no feasible alternative");
        return;
      }
      if (feas.size() == 1) choice = feas.front();
    }
    if (choice >= 0)
      propagate_equation(ws_.disjunctions[i].alternatives[static_cast<std::size_t>(choice)]);
  }

  const WorkingSystem& ws_;
  const ConstraintSystem& sys_;
  SearchState& st_;
  int trace_;
  bool changed_ = false;
  bool conflict_ = false;
  std::string reason_;
  std::size_t tightenings_ = 0;
};

/// Builds the LP of a search node: all linear equations, the linear form of
/// every phase-determined PWL constraint and chosen disjunction alternative,
/// plus sound relaxations of the undetermined ones.
LinearProgram node_lp(const WorkingSystem& ws, const SearchState& st) {
  const ConstraintSystem& sys = *ws.sys;
  LinearProgram lp(sys.num_vars());
  for (std::size_t v = 0; v < sys.num_vars(); ++v) lp.set_bounds(v, st.lo[v], st.hi[v]);

  auto add_eq = [&lp](const LinearEquation& eq) {
    std::vector<std::pair<std::size_t, double>> terms;
    terms.reserve(eq.terms.size());
    for (const LinearTerm& t : eq.terms) terms.emplace_back(t.var.index, t.coef);
    lp.add_row(std::move(terms), eq.rel, eq.constant);
  };

  for (const LinearEquation& eq : ws.equations) add_eq(eq);

  for (std::size_t i = 0; i < sys.pwl().size(); ++i) {
    const int phase = st.phase[i];
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, ReluConstraint>) {
            const std::size_t in = c.in.index, out = c.out.index;
            if (phase == 1) {
              lp.add_row({{out, 1.0}, {in, -1.0}}, Relation::EQ, 0.0);
            } else if (phase == 0) {
              lp.add_row({{out, 1.0}}, Relation::EQ, 0.0);
            } else {
              lp.add_row({{out, 1.0}, {in, -1.0}}, Relation::GE, 0.0);
              const double l = st.lo[in], u = st.hi[in];
              if (l > -kInfinity && u < kInfinity && l < 0.0 && u > 0.0)
                lp.add_row({{out, u - l}, {in, -u}}, Relation::LE, -u * l);
            }
          } else if constexpr (std::is_same_v<T, AbsConstraint>) {
            const std::size_t in = c.in.index, out = c.out.index;
            if (phase == 1) {
              lp.add_row({{out, 1.0}, {in, -1.0}}, Relation::EQ, 0.0);
            } else if (phase == 0) {
              lp.add_row({{out, 1.0}, {in, 1.0}}, Relation::EQ, 0.0);
            } else {
              lp.add_row({{out, 1.0}, {in, -1.0}}, Relation::GE, 0.0);
              lp.add_row({{out, 1.0}, {in, 1.0}}, Relation::GE, 0.0);
            }
          } else {
            const std::size_t out = c.out.index;
            for (VarId in : c.inputs)
              lp.add_row({{out, 1.0}, {in.index, -1.0}}, Relation::GE, 0.0);
            if (phase >= 0) {
              const std::size_t win = c.inputs[static_cast<std::size_t>(phase)].index;
              lp.add_row({{out, 1.0}, {win, -1.0}}, Relation::EQ, 0.0);
              for (VarId in : c.inputs)
                if (in.index != win) lp.add_row({{in.index, 1.0}, {win, -1.0}}, Relation::LE, 0.0);
            }
          }
        },
        sys.pwl()[i]);
  }

  for (std::size_t i = 0; i < ws.disjunctions.size(); ++i) {
    if (st.dchoice[i] < 0) continue;
    add_eq(ws.disjunctions[i].alternatives[static_cast<std::size_t>(st.dchoice[i])]);
  }

  return lp;
}

struct BranchChoice {
  enum Kind { Pwl, Disj } kind = Pwl;
  std::size_t index = 0;
  std::vector<int> branches;
};

const char* pwl_kind_name(const PwlConstraint& c) {
  if (std::holds_alternative<ReluConstraint>(c)) return "relu";
  if (std::holds_alternative<AbsConstraint>(c)) return "abs";
  return "max";
}

/// Branch selection. Within a tier the constraint with the largest interval
/// straddle wins, ties by constraint id; branch order follows the LP point
/// when one is available. Tiers, highest first:
///   3  Max whose output lower bound exceeds every input lower bound -
///      committing to a winner pushes an externally forced bound (such as
///      the confidence threshold) onto an input, which prunes hardest;
///   2  ReLU / Abs phases;
///   1  disjunctions;
///   0  slack Max constraints - nothing binds their output, so splitting
///      them cannot prune; they resolve by deduction or the final LPs.
std::optional<BranchChoice> choose_branch(const WorkingSystem& ws, const SearchState& st,
                                          const Deducer& ded,
                                          const std::vector<double>* hint) {
  const ConstraintSystem& sys = *ws.sys;
  std::optional<BranchChoice> best;
  double best_score = -1.0;
  int best_tier = -1;
  auto consider = [&](int tier, double score, BranchChoice choice) {
    if (!std::isfinite(score)) score = 1e300;
    if (tier > best_tier || (tier == best_tier && score > best_score)) {
      best_tier = tier;
      best_score = score;
      best = std::move(choice);
    }
  };

  for (std::size_t i = 0; i < sys.pwl().size(); ++i) {
    if (st.phase[i] >= 0) continue;
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, ReluConstraint> || std::is_same_v<T, AbsConstraint>) {
            std::vector<int> branches{1, 0};
            if (hint && (*hint)[c.in.index] < 0.0) branches = {0, 1};
            consider(2, std::min(-st.lo[c.in.index], st.hi[c.in.index]),
                     BranchChoice{BranchChoice::Pwl, i, std::move(branches)});
          } else {
            std::vector<int> branches = ded.max_candidates(c);
            if (branches.empty()) return;
            double inputs_lo = -kInfinity;
            double score = 0.0;
            for (std::size_t j = 0; j < c.inputs.size(); ++j)
              inputs_lo = std::max(inputs_lo, st.lo[c.inputs[j].index]);
            for (int j : branches) {
              const std::size_t v = c.inputs[static_cast<std::size_t>(j)].index;
              score += std::max(0.0, st.hi[v] - std::max(st.lo[v], st.lo[c.out.index]));
            }
            if (hint && branches.size() > 1) {
              std::stable_sort(branches.begin(), branches.end(), [&](int a, int b) {
                return (*hint)[c.inputs[static_cast<std::size_t>(a)].index] >
                       (*hint)[c.inputs[static_cast<std::size_t>(b)].index];
              });
            }
            const bool binding = st.lo[c.out.index] > inputs_lo + 1e-9;
            consider(binding ? 3 : 0, score, BranchChoice{BranchChoice::Pwl, i, std::move(branches)});
          }
        },
        sys.pwl()[i]);
  }

  if (best_tier < 2) {
    for (std::size_t i = 0; i < ws.disjunctions.size(); ++i) {
      if (st.dchoice[i] >= 0) continue;
      std::vector<int> feas = ded.feasible_alternatives(i);
      if (feas.empty()) continue;
      consider(1, static_cast<double>(feas.size()),
               BranchChoice{BranchChoice::Disj, i, std::move(feas)});
      break;  // first undetermined disjunction, by id
    }
  }
  return best;
}

/// True when the relaxation point already satisfies every constraint of the
/// working system; phases consistent with the point are written to `st` so
/// an exact leaf LP can be rebuilt for witness improvement.
bool point_satisfies(const WorkingSystem& ws, const std::vector<double>& a, SearchState& st) {
  const ConstraintSystem& sys = *ws.sys;
  const double tol = 1e-9;
  auto holds = [&](const LinearEquation& eq) {
    double s = 0.0;
    for (const LinearTerm& t : eq.terms) s += t.coef * a[t.var.index];
    switch (eq.rel) {
      case Relation::LE:
      case Relation::LT:
        return s <= eq.constant + tol;
      case Relation::GE:
      case Relation::GT:
        return s >= eq.constant - tol;
      default:
        return std::fabs(s - eq.constant) <= tol;
    }
  };
  for (const LinearEquation& eq : ws.equations)
    if (!holds(eq)) return false;

  for (std::size_t i = 0; i < sys.pwl().size(); ++i) {
    const bool ok = std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, ReluConstraint>) {
            if (std::fabs(a[c.out.index] - std::max(0.0, a[c.in.index])) > tol) return false;
            if (st.phase[i] < 0) st.phase[i] = a[c.in.index] >= 0.0 ? 1 : 0;
            return true;
          } else if constexpr (std::is_same_v<T, AbsConstraint>) {
            if (std::fabs(a[c.out.index] - std::fabs(a[c.in.index])) > tol) return false;
            if (st.phase[i] < 0) st.phase[i] = a[c.in.index] >= 0.0 ? 1 : 0;
            return true;
          } else {
            double m = -kInfinity;
            int arg = 0;
            for (std::size_t j = 0; j < c.inputs.size(); ++j) {
              if (a[c.inputs[j].index] > m) {
                m = a[c.inputs[j].index];
                arg = static_cast<int>(j);
              }
            }
            if (std::fabs(a[c.out.index] - m) > tol) return false;
            if (st.phase[i] < 0) st.phase[i] = arg;
            return true;
          }
        },
        sys.pwl()[i]);
    if (!ok) return false;
  }
  for (std::size_t i = 0; i < ws.disjunctions.size(); ++i) {
    if (st.dchoice[i] >= 0) {
      if (!holds(ws.disjunctions[i].alternatives[static_cast<std::size_t>(st.dchoice[i])]))
        return false;
      continue;
    }
    int chosen = -1;
    const auto& alts = ws.disjunctions[i].alternatives;
    for (std::size_t alt = 0; alt < alts.size(); ++alt) {
      if (holds(alts[alt])) {
        chosen = static_cast<int>(alt);
        break;
      }
    }
    if (chosen < 0) return false;
    st.dchoice[i] = chosen;
  }
  return true;
}

class Searcher {
 public:
  Searcher(const WorkingSystem& ws, const SolveOptions& opts)
      : ws_(ws), opts_(opts), start_(std::chrono::steady_clock::now()) {}

  SolveResult run(SearchState st) {
    SolveResult res;
    res.status = dfs(std::move(st), 0);
    res.stats = stats_;
    if (res.status == SolveStatus::Feasible) res.assignment = std::move(assignment_);
    const auto end = std::chrono::steady_clock::now();
    res.stats.wall_seconds = std::chrono::duration<double>(end - start_).count();
    return res;
  }

 private:
  bool out_of_budget() {
    if (stats_.splits > opts_.budget.max_splits) return true;
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(now - start_).count() > opts_.budget.max_seconds;
  }

  SolveStatus dfs(SearchState st, int depth) {
    if (out_of_budget()) return SolveStatus::BudgetExhausted;

    Deducer ded(ws_, st, opts_.trace);
    ded.run();
    stats_.deductions += ded.tightenings();
    if (ded.conflict()) {
      if (opts_.trace >= 1)
        std::fprintf(stderr, "[solve] conflict depth=%d reason=%s\n", depth, ded.reason().c_str());
      return SolveStatus::Infeasible;
    }

    bool leaf = true;
    for (int p : st.phase) leaf &= p >= 0;
    for (int d : st.dchoice) leaf &= d >= 0;

    LinearProgram lp = node_lp(ws_, st);
    const LpResult lpres = lp.solve(leaf && opts_.maximize
                                        ? std::optional<std::size_t>(opts_.maximize->index)
                                        : std::nullopt);
    stats_.lp_pivots += lpres.pivots;
    if (lpres.status == LpStatus::Infeasible) return SolveStatus::Infeasible;
    if (lpres.status == LpStatus::IterationLimit) return SolveStatus::BudgetExhausted;

    if (leaf) {
      assignment_ = lpres.assignment;
      return SolveStatus::Feasible;
    }

    // The relaxation point may already satisfy every constraint; accept it
    // without further splitting. The phases it determines describe an exact
    // cell, which the witness-improvement pass re-solves.
    SearchState cell = st;
    if (point_satisfies(ws_, lpres.assignment, cell)) {
      if (opts_.maximize) {
        Deducer cell_ded(ws_, cell, 0);
        cell_ded.run();
        if (!cell_ded.conflict()) {
          LinearProgram exact = node_lp(ws_, cell);
          const LpResult improved = exact.solve(std::optional<std::size_t>(opts_.maximize->index));
          stats_.lp_pivots += improved.pivots;
          if (improved.status == LpStatus::Feasible) {
            assignment_ = improved.assignment;
            return SolveStatus::Feasible;
          }
        }
      }
      assignment_ = lpres.assignment;
      return SolveStatus::Feasible;
    }

    const std::optional<BranchChoice> pick = choose_branch(ws_, st, ded, &lpres.assignment);
    if (!pick) throw std::logic_error("undetermined constraint without branch candidates");

    for (int b : pick->branches) {
      ++stats_.splits;
      if (opts_.trace >= 1) {
        if (pick->kind == BranchChoice::Pwl)
          std::fprintf(stderr, "[solve] split %s id=%zu branch=%d depth=%d\n",
                       pwl_kind_name(ws_.sys->pwl()[pick->index]), pick->index, b, depth);
        else
          std::fprintf(stderr, "[solve] split disjunction id=%zu branch=%d depth=%d\n", pick->index,
                       b, depth);
      }
      SearchState child = st;
      if (pick->kind == BranchChoice::Pwl)
        child.phase[pick->index] = b;
      else
        child.dchoice[pick->index] = b;
      const SolveStatus s = dfs(std::move(child), depth + 1);
      if (s != SolveStatus::Infeasible) return s;
    }
    return SolveStatus::Infeasible;
  }

  const WorkingSystem& ws_;
  const SolveOptions& opts_;
  SolveStats stats_;
  std::vector<double> assignment_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

SolveResult solve(const ConstraintSystem& system, const SolveOptions& options) {
  const WorkingSystem ws = make_working(system, options.strict_slack);
  Searcher searcher(ws, options);
  return searcher.run(initial_state(ws));
}

BoundDeduction deduce_bounds(const ConstraintSystem& system) {
  // Strict relations are treated as their non-strict closures here, which
  // never removes a feasible point of the original system.
  const WorkingSystem ws = make_working(system, 0.0);
  SearchState st = initial_state(ws);
  Deducer ded(ws, st, 0);
  ded.run();
  BoundDeduction out;
  out.lower = std::move(st.lo);
  out.upper = std::move(st.hi);
  out.pwl_phase = std::move(st.phase);
  out.disjunction_choice = std::move(st.dchoice);
  out.conflict = ded.conflict();
  out.conflict_reason = ded.reason();
  out.tightenings = ded.tightenings();
  return out;
}

SolveResult enumerate_oracle(const ConstraintSystem& system, const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const WorkingSystem ws = make_working(system, options.strict_slack);

  std::vector<std::size_t> counts;
  for (const PwlConstraint& c : system.pwl()) {
    if (std::holds_alternative<MaxConstraint>(c))
      counts.push_back(std::get<MaxConstraint>(c).inputs.size());
    else
      counts.push_back(2);
  }
  for (const Disjunction& d : ws.disjunctions) counts.push_back(d.alternatives.size());

  double total = 1.0;
  for (std::size_t k : counts) total *= static_cast<double>(k);
  if (total > static_cast<double>(1u << 20))
    throw std::invalid_argument("enumeration case count exceeds 2^20");

  const std::size_t num_pwl = system.pwl().size();
  std::vector<std::size_t> odometer(counts.size(), 0);

  SolveResult res;
  res.status = SolveStatus::Infeasible;
  while (true) {
    LinearProgram lp(system.num_vars());
    for (std::size_t v = 0; v < system.num_vars(); ++v)
      lp.set_bounds(v, system.lower(VarId{v}), system.upper(VarId{v}));
    auto add_eq = [&lp](const LinearEquation& eq) {
      std::vector<std::pair<std::size_t, double>> terms;
      for (const LinearTerm& t : eq.terms) terms.emplace_back(t.var.index, t.coef);
      lp.add_row(std::move(terms), eq.rel, eq.constant);
    };
    for (const LinearEquation& eq : ws.equations) add_eq(eq);

    for (std::size_t i = 0; i < num_pwl; ++i) {
      const std::size_t branch = odometer[i];
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ReluConstraint>) {
              if (branch == 1) {
                lp.add_row({{c.out.index, 1.0}, {c.in.index, -1.0}}, Relation::EQ, 0.0);
                lp.add_row({{c.in.index, 1.0}}, Relation::GE, 0.0);
              } else {
                lp.add_row({{c.out.index, 1.0}}, Relation::EQ, 0.0);
                lp.add_row({{c.in.index, 1.0}}, Relation::LE, 0.0);
              }
            } else if constexpr (std::is_same_v<T, AbsConstraint>) {
              if (branch == 1) {
                lp.add_row({{c.out.index, 1.0}, {c.in.index, -1.0}}, Relation::EQ, 0.0);
                lp.add_row({{c.in.index, 1.0}}, Relation::GE, 0.0);
              } else {
                lp.add_row({{c.out.index, 1.0}, {c.in.index, 1.0}}, Relation::EQ, 0.0);
                lp.add_row({{c.in.index, 1.0}}, Relation::LE, 0.0);
              }
            } else {
              const std::size_t win = c.inputs[branch].index;
              lp.add_row({{c.out.index, 1.0}, {win, -1.0}}, Relation::EQ, 0.0);
              for (VarId in : c.inputs)
                if (in.index != win) lp.add_row({{in.index, 1.0}, {win, -1.0}}, Relation::LE, 0.0);
            }
          },
          system.pwl()[i]);
    }
    for (std::size_t d = 0; d < ws.disjunctions.size(); ++d)
      add_eq(ws.disjunctions[d].alternatives[odometer[num_pwl + d]]);

    const LpResult lpres = lp.solve();
    res.stats.lp_pivots += lpres.pivots;
    if (lpres.status == LpStatus::Feasible) {
      res.status = SolveStatus::Feasible;
      res.assignment = lpres.assignment;
      break;
    }

    // advance odometer
    std::size_t pos = 0;
    for (; pos < odometer.size(); ++pos) {
      if (++odometer[pos] < counts[pos]) break;
      odometer[pos] = 0;
    }
    if (pos == odometer.size()) break;
    ++res.stats.splits;
  }
  const auto end = std::chrono::steady_clock::now();
  res.stats.wall_seconds = std::chrono::duration<double>(end - start).count();
  return res;
}

}  // namespace certiglobe
