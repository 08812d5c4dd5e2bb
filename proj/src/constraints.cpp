#include "certiglobe/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "certiglobe/network.hpp"  // ParseError

namespace certiglobe {

VarId ConstraintSystem::add_var(double lo, double hi, std::string name) {
  if (std::isnan(lo) || std::isnan(hi)) throw std::invalid_argument("NaN bound");
  if (lo > hi) throw std::invalid_argument("inverted bounds on variable " + name);
  lower_.push_back(lo);
  upper_.push_back(hi);
  names_.push_back(std::move(name));
  return VarId{lower_.size() - 1};
}

void ConstraintSystem::set_bounds(VarId v, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("inverted bounds");
  lower_[v.index] = lo;
  upper_[v.index] = hi;
}

void ConstraintSystem::tighten_bounds(VarId v, double lo, double hi) {
  lower_[v.index] = std::max(lower_[v.index], lo);
  upper_[v.index] = std::min(upper_[v.index], hi);
}

void ConstraintSystem::add_equation(LinearEquation eq) { equations_.push_back(std::move(eq)); }

void ConstraintSystem::add_relu(VarId in, VarId out) { pwl_.push_back(ReluConstraint{in, out}); }

void ConstraintSystem::add_max(VarId out, std::vector<VarId> inputs) {
  pwl_.push_back(MaxConstraint{out, std::move(inputs)});
}

void ConstraintSystem::add_abs(VarId in, VarId out) { pwl_.push_back(AbsConstraint{in, out}); }

void ConstraintSystem::add_disjunction(Disjunction d) { disjunctions_.push_back(std::move(d)); }

namespace {

void validate_equation(const ConstraintSystem& sys, const LinearEquation& eq, const char* where,
                       std::vector<Violation>& out) {
  if (eq.terms.empty()) {
    out.push_back({std::string(where) + ": equation without terms"});
    return;
  }
  std::set<std::size_t> seen;
  for (const LinearTerm& t : eq.terms) {
    if (t.var.index >= sys.num_vars())
      out.push_back({std::string(where) + ": dangling variable " + std::to_string(t.var.index)});
    if (!seen.insert(t.var.index).second)
      out.push_back({std::string(where) + ": duplicate variable " + std::to_string(t.var.index)});
    if (!std::isfinite(t.coef)) out.push_back({std::string(where) + ": non-finite coefficient"});
  }
  if (!std::isfinite(eq.constant)) out.push_back({std::string(where) + ": non-finite constant"});
}

}  // namespace

std::vector<Violation> validate(const ConstraintSystem& sys) {
  std::vector<Violation> out;
  for (std::size_t v = 0; v < sys.num_vars(); ++v) {
    const double lo = sys.lower(VarId{v}), hi = sys.upper(VarId{v});
    if (std::isnan(lo) || std::isnan(hi))
      out.push_back({"variable " + std::to_string(v) + ": NaN bound"});
    else if (lo > hi)
      out.push_back({"variable " + std::to_string(v) + ": inverted bounds"});
  }
  for (std::size_t i = 0; i < sys.equations().size(); ++i)
    validate_equation(sys, sys.equations()[i], ("equation " + std::to_string(i)).c_str(), out);

  auto check_var = [&](VarId v, const std::string& where) {
    if (v.index >= sys.num_vars()) out.push_back({where + ": dangling variable"});
  };
  for (std::size_t i = 0; i < sys.pwl().size(); ++i) {
    const std::string where = "pwl " + std::to_string(i);
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, ReluConstraint> || std::is_same_v<T, AbsConstraint>) {
            check_var(c.in, where);
            check_var(c.out, where);
            if (c.in == c.out) out.push_back({where + ": output aliases input"});
          } else {
            check_var(c.out, where);
            if (c.inputs.empty()) out.push_back({where + ": max without inputs"});
            for (VarId in : c.inputs) {
              check_var(in, where);
              if (in == c.out) out.push_back({where + ": output aliases input"});
            }
          }
        },
        sys.pwl()[i]);
  }
  for (std::size_t i = 0; i < sys.disjunctions().size(); ++i) {
    const std::string where = "disjunction " + std::to_string(i);
    const Disjunction& d = sys.disjunctions()[i];
    if (d.alternatives.empty()) out.push_back({where + ": empty"});
    for (const LinearEquation& alt : d.alternatives) validate_equation(sys, alt, where.c_str(), out);
  }
  return out;
}

namespace {

double eval_sum(const LinearEquation& eq, std::span<const double> a) {
  double s = 0.0;
  for (const LinearTerm& t : eq.terms) s += t.coef * a[t.var.index];
  return s;
}

bool holds(const LinearEquation& eq, std::span<const double> a, double tol) {
  const double s = eval_sum(eq, a);
  switch (eq.rel) {
    case Relation::LE:
    case Relation::LT:
      return s <= eq.constant + tol;
    case Relation::GE:
    case Relation::GT:
      return s >= eq.constant - tol;
    case Relation::EQ:
      return std::fabs(s - eq.constant) <= tol;
  }
  return false;
}

}  // namespace

CheckResult eval_assignment(const ConstraintSystem& sys, std::span<const double> a, double tol) {
  if (a.size() != sys.num_vars()) throw std::invalid_argument("assignment length mismatch");

  for (std::size_t v = 0; v < sys.num_vars(); ++v) {
    if (a[v] < sys.lower(VarId{v}) - tol || a[v] > sys.upper(VarId{v}) + tol)
      return {false, "bounds of variable " + std::to_string(v)};
  }
  for (std::size_t i = 0; i < sys.equations().size(); ++i)
    if (!holds(sys.equations()[i], a, tol)) return {false, "equation " + std::to_string(i)};

  for (std::size_t i = 0; i < sys.pwl().size(); ++i) {
    const bool ok = std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, ReluConstraint>)
            return std::fabs(a[c.out.index] - std::max(0.0, a[c.in.index])) <= tol;
          else if constexpr (std::is_same_v<T, AbsConstraint>)
            return std::fabs(a[c.out.index] - std::fabs(a[c.in.index])) <= tol;
          else {
            double m = -kInfinity;
            for (VarId in : c.inputs) m = std::max(m, a[in.index]);
            return std::fabs(a[c.out.index] - m) <= tol;
          }
        },
        sys.pwl()[i]);
    if (!ok) return {false, "pwl constraint " + std::to_string(i)};
  }
  for (std::size_t i = 0; i < sys.disjunctions().size(); ++i) {
    const Disjunction& d = sys.disjunctions()[i];
    const bool any = std::any_of(d.alternatives.begin(), d.alternatives.end(),
                                 [&](const LinearEquation& alt) { return holds(alt, a, tol); });
    if (!any) return {false, "disjunction " + std::to_string(i)};
  }
  return {true, {}};
}

void lower_segmented(ConstraintSystem& sys, const SegmentedFunction& sf) {
  const auto& segs = sf.segments;
  if (segs.empty()) throw std::invalid_argument("segmented function without segments");
  constexpr double knot_tol = 1e-9;
  bool has_zero_knot = false;
  for (std::size_t j = 0; j + 1 < segs.size(); ++j) {
    if (std::fabs(segs[j].hi - segs[j + 1].lo) > knot_tol)
      throw std::invalid_argument("non-contiguous segments");
    if (std::fabs(segs[j].at(segs[j].hi) - segs[j + 1].at(segs[j + 1].lo)) > knot_tol)
      throw std::invalid_argument("discontinuous segment values");
    if (std::fabs(segs[j].hi) <= knot_tol) has_zero_knot = true;
  }
  if (!has_zero_knot) throw std::invalid_argument("segments must split at x = 0");
  if (std::fabs(segs.front().at(segs.front().lo)) > knot_tol ||
      std::fabs(segs.back().at(segs.back().hi) - 1.0) > knot_tol)
    throw std::invalid_argument("segment end values must be 0 and 1");
  for (std::size_t j = 0; j + 1 < segs.size(); ++j) {
    const bool lower_piece = segs[j + 1].hi <= knot_tol;
    if (lower_piece && segs[j].slope > segs[j + 1].slope + knot_tol)
      throw std::invalid_argument("lower piece is not convex");
    if (segs[j].lo >= -knot_tol && segs[j].slope < segs[j + 1].slope - knot_tol)
      throw std::invalid_argument("upper piece is not concave");
  }

  const std::string base = "sig" + std::to_string(sf.out.index) + ".";
  const VarId zero = sys.add_var(0.0, 0.0, base + "c0");
  const VarId neg_half = sys.add_var(-0.5, -0.5, base + "c-0.5");
  const VarId half = sys.add_var(0.5, 0.5, base + "c0.5");
  const VarId neg_one = sys.add_var(-1.0, -1.0, base + "c-1");

  // Lower convex piece: S1 = min(max(0, q_j), 1/2).
  std::vector<VarId> lower_inputs{zero};
  for (const SigmoidSegment& s : segs) {
    if (s.hi > knot_tol) continue;
    const VarId q = sys.add_var(-kInfinity, kInfinity, base + "q");
    sys.add_equation({{{1.0, q}, {-s.slope, sf.in}}, Relation::EQ, s.intercept});
    lower_inputs.push_back(q);
  }
  const VarId m1 = sys.add_var(0.0, kInfinity, base + "max_lo");
  sys.add_max(m1, std::move(lower_inputs));
  const VarId neg_m1 = sys.add_var(-kInfinity, 0.0, base + "neg_max_lo");
  sys.add_equation({{{1.0, neg_m1}, {1.0, m1}}, Relation::EQ, 0.0});
  const VarId neg_s1 = sys.add_var(-0.5, 0.0, base + "neg_s1");
  sys.add_max(neg_s1, {neg_m1, neg_half});
  const VarId s1 = sys.add_var(0.0, 0.5, base + "s1");
  sys.add_equation({{{1.0, s1}, {1.0, neg_s1}}, Relation::EQ, 0.0});

  // Upper concave piece: S2 = max(min(1, q_j), 1/2); min through negation.
  std::vector<VarId> neg_upper_inputs{neg_one};
  for (const SigmoidSegment& s : segs) {
    if (s.lo < -knot_tol) continue;
    const VarId r = sys.add_var(-kInfinity, kInfinity, base + "nq");
    sys.add_equation({{{1.0, r}, {s.slope, sf.in}}, Relation::EQ, -s.intercept});
    neg_upper_inputs.push_back(r);
  }
  const VarId neg_min = sys.add_var(-1.0, kInfinity, base + "neg_min_hi");
  sys.add_max(neg_min, std::move(neg_upper_inputs));
  const VarId minv = sys.add_var(-kInfinity, 1.0, base + "min_hi");
  sys.add_equation({{{1.0, minv}, {1.0, neg_min}}, Relation::EQ, 0.0});
  const VarId s2 = sys.add_var(0.5, 1.0, base + "s2");
  sys.add_max(s2, {minv, half});

  sys.add_equation({{{1.0, sf.out}, {-1.0, s1}, {-1.0, s2}}, Relation::EQ, -0.5});
  sys.tighten_bounds(sf.out, 0.0, 1.0);
}

namespace {

std::string fmt(double v) {
  if (v == kInfinity) return "inf";
  if (v == -kInfinity) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* rel_token(Relation r) {
  switch (r) {
    case Relation::LE: return "le";
    case Relation::GE: return "ge";
    case Relation::EQ: return "eq";
    case Relation::LT: return "lt";
    case Relation::GT: return "gt";
  }
  return "?";
}

Relation parse_rel(const std::string& tok, std::size_t line) {
  if (tok == "le") return Relation::LE;
  if (tok == "ge") return Relation::GE;
  if (tok == "eq") return Relation::EQ;
  if (tok == "lt") return Relation::LT;
  if (tok == "gt") return Relation::GT;
  throw ParseError(line, "unknown relation '" + tok + "'");
}

void write_equation(std::ostream& os, const LinearEquation& eq) {
  os << rel_token(eq.rel) << " " << fmt(eq.constant) << " " << eq.terms.size();
  for (const LinearTerm& t : eq.terms) os << " " << fmt(t.coef) << " " << t.var.index;
}

double parse_bound(const std::string& tok, std::size_t line) {
  if (tok == "inf") return kInfinity;
  if (tok == "-inf") return -kInfinity;
  try {
    return std::stod(tok);
  } catch (const std::exception&) {
    throw ParseError(line, "malformed number '" + tok + "'");
  }
}

LinearEquation parse_equation(std::istringstream& is, std::size_t line) {
  LinearEquation eq;
  std::string rel, cst;
  std::size_t k = 0;
  if (!(is >> rel >> cst >> k)) throw ParseError(line, "malformed equation header");
  eq.rel = parse_rel(rel, line);
  eq.constant = parse_bound(cst, line);
  for (std::size_t i = 0; i < k; ++i) {
    std::string coef;
    std::size_t var = 0;
    if (!(is >> coef >> var)) throw ParseError(line, "malformed equation term");
    eq.terms.push_back({parse_bound(coef, line), VarId{var}});
  }
  return eq;
}

}  // namespace

void dump_system(const ConstraintSystem& sys, std::ostream& os) {
  os << "certiglobe-plc v1\n";
  os << "vars " << sys.num_vars() << "\n";
  for (std::size_t v = 0; v < sys.num_vars(); ++v) {
    os << "var " << v << " " << fmt(sys.lower(VarId{v})) << " " << fmt(sys.upper(VarId{v}));
    if (!sys.name(VarId{v}).empty()) os << " " << sys.name(VarId{v});
    os << "\n";
  }
  for (const LinearEquation& eq : sys.equations()) {
    os << "lin ";
    write_equation(os, eq);
    os << "\n";
  }
  for (const PwlConstraint& c : sys.pwl()) {
    std::visit(
        [&](const auto& pc) {
          using T = std::decay_t<decltype(pc)>;
          if constexpr (std::is_same_v<T, ReluConstraint>)
            os << "relu " << pc.in.index << " " << pc.out.index << "\n";
          else if constexpr (std::is_same_v<T, AbsConstraint>)
            os << "abs " << pc.in.index << " " << pc.out.index << "\n";
          else {
            os << "max " << pc.out.index << " " << pc.inputs.size();
            for (VarId in : pc.inputs) os << " " << in.index;
            os << "\n";
          }
        },
        c);
  }
  for (const Disjunction& d : sys.disjunctions()) {
    os << "disj " << d.alternatives.size();
    for (const LinearEquation& alt : d.alternatives) {
      os << " ; ";
      write_equation(os, alt);
    }
    os << "\n";
  }
}

ConstraintSystem load_system(std::istream& is) {
  ConstraintSystem sys;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::size_t declared_vars = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (!header_seen) {
      std::string version;
      if (key != "certiglobe-plc" || !(ls >> version) || version != "v1")
        throw ParseError(lineno, "expected 'certiglobe-plc v1' header");
      header_seen = true;
      continue;
    }
    if (key == "vars") {
      if (!(ls >> declared_vars)) throw ParseError(lineno, "malformed vars line");
    } else if (key == "var") {
      std::size_t idx = 0;
      std::string lo, hi, name;
      if (!(ls >> idx >> lo >> hi)) throw ParseError(lineno, "malformed var line");
      ls >> name;
      if (idx != sys.num_vars()) throw ParseError(lineno, "variables out of order");
      sys.add_var(parse_bound(lo, lineno), parse_bound(hi, lineno), name);
    } else if (key == "lin") {
      sys.add_equation(parse_equation(ls, lineno));
    } else if (key == "relu" || key == "abs") {
      std::size_t in = 0, out = 0;
      if (!(ls >> in >> out)) throw ParseError(lineno, "malformed " + key + " line");
      if (key == "relu")
        sys.add_relu(VarId{in}, VarId{out});
      else
        sys.add_abs(VarId{in}, VarId{out});
    } else if (key == "max") {
      std::size_t out = 0, k = 0;
      if (!(ls >> out >> k)) throw ParseError(lineno, "malformed max line");
      std::vector<VarId> inputs;
      for (std::size_t i = 0; i < k; ++i) {
        std::size_t in = 0;
        if (!(ls >> in)) throw ParseError(lineno, "malformed max input");
        inputs.push_back(VarId{in});
      }
      sys.add_max(VarId{out}, std::move(inputs));
    } else if (key == "disj") {
      std::size_t k = 0;
      if (!(ls >> k)) throw ParseError(lineno, "malformed disj line");
      Disjunction d;
      for (std::size_t i = 0; i < k; ++i) {
        std::string sep;
        if (!(ls >> sep) || sep != ";") throw ParseError(lineno, "expected ';' between alternatives");
        d.alternatives.push_back(parse_equation(ls, lineno));
      }
      sys.add_disjunction(std::move(d));
    } else {
      throw ParseError(lineno, "unknown directive '" + key + "'");
    }
  }
  if (!header_seen) throw ParseError(lineno, "missing header");
  if (declared_vars != sys.num_vars())
    throw ParseError(lineno, "declared variable count disagrees with var lines");
  return sys;
}

}  // namespace certiglobe
