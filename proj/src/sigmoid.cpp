#include "certiglobe/sigmoid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace certiglobe {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

PwlSigmoid::PwlSigmoid(double delta, double domain_hi, std::vector<SigmoidSegment> segments)
    : delta_(delta), domain_hi_(domain_hi), segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("empty segment list");
}

double PwlSigmoid::operator()(double x) const {
  if (x < -domain_hi_) return 0.0;
  if (x > domain_hi_) return 1.0;
  // first segment whose upper end covers x
  std::size_t lo = 0, hi = segments_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (segments_[mid].hi < x)
      lo = mid + 1;
    else
      hi = mid;
  }
  return segments_[lo].at(x);
}

double sig_hat(const PwlSigmoid& pwl, double x) { return pwl(x); }

namespace {

struct Refs {
  double x0, x1, x2;
};

// Solve L(x_i) - f(x_i) = sign_i * e with alternating signs (+,-,+) for the
// line L = c1*x + c0 and the oscillation level e. The outer references share
// a sign, so the slope is their secant and e follows from the middle one.
void solve_reference_system(const Refs& r, double f0, double f1, double f2, double& c0, double& c1,
                            double& e) {
  c1 = (f2 - f0) / (r.x2 - r.x0);
  e = 0.5 * ((f1 - f0) - c1 * (r.x1 - r.x0));
  c0 = f0 + e - c1 * r.x0;
}

double max_abs_error_on(const std::function<double(double)>& f, double c0, double c1, double a,
                        double b, double* argmax, bool interior_only) {
  const int grid = 1024;
  double best = -1.0, bestx = a;
  const int first = interior_only ? 1 : 0;
  const int last = interior_only ? grid - 1 : grid;
  for (int i = first; i <= last; ++i) {
    const double x = a + (b - a) * i / grid;
    const double e = std::fabs(c0 + c1 * x - f(x));
    if (e > best) {
      best = e;
      bestx = x;
    }
  }
  // golden-section refinement around the grid argmax
  double lo = std::max(a, bestx - (b - a) / grid);
  double hi = std::min(b, bestx + (b - a) / grid);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  auto err = [&](double x) { return std::fabs(c0 + c1 * x - f(x)); };
  double e1 = err(x1), e2 = err(x2);
  for (int it = 0; it < 80; ++it) {
    if (e1 < e2) {
      lo = x1;
      x1 = x2;
      e1 = e2;
      x2 = lo + phi * (hi - lo);
      e2 = err(x2);
    } else {
      hi = x2;
      x2 = x1;
      e2 = e1;
      x1 = hi - phi * (hi - lo);
      e1 = err(x1);
    }
  }
  const double x = 0.5 * (lo + hi);
  const double e = err(x);
  if (e > best) {
    best = e;
    bestx = x;
  }
  if (argmax) *argmax = bestx;
  return best;
}

}  // namespace

MinimaxLine remez_minimax_line(const std::function<double(double)>& f, double a, double b,
                               std::size_t max_iterations) {
  if (!(a < b)) throw std::invalid_argument("degenerate interval");
  Refs r{a, 0.5 * (a + b), b};
  double c0 = 0.0, c1 = 0.0, e = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    solve_reference_system(r, f(r.x0), f(r.x1), f(r.x2), c0, c1, e);
    double xm = r.x1;
    const double worst = max_abs_error_on(f, c0, c1, a, b, &xm, /*interior_only=*/true);
    if (worst <= std::fabs(e) * (1.0 + 1e-9) + 1e-15)
      return MinimaxLine{c1, c0, std::max(worst, std::fabs(e))};
    // single-extremum exchange: the interior reference moves to the new peak
    const double margin = (b - a) * 1e-6;
    r.x1 = std::clamp(xm, a + margin, b - margin);
  }
  // the exchange stalls only on numerically flat stretches; the measured
  // error is still valid, so report the last fit
  double xm = 0.0;
  const double worst = max_abs_error_on(f, c0, c1, a, b, &xm, false);
  return MinimaxLine{c1, c0, worst};
}

namespace {

// Largest b in (a, limit] whose minimax fit error stays within target.
double grow_segment(const std::function<double(double)>& f, double a, double limit, double target,
                    double hint) {
  if (remez_minimax_line(f, a, limit).error <= target) return limit;
  double step = hint > 0.0 ? hint : 0.25;
  double ok = a + 1e-12;
  while (a + step < limit && remez_minimax_line(f, a, a + step).error <= target) {
    ok = a + step;
    step *= 2.0;
  }
  double bad = std::min(limit, a + step);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (ok + bad);
    if (remez_minimax_line(f, a, mid).error <= target)
      ok = mid;
    else
      bad = mid;
  }
  return ok;
}

}  // namespace

PwlSigmoid remez_sigmoid(double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("delta must lie in (0, 0.5)");

  // Operating domain [-T, T]. T reproduces the published endpoint for
  // delta = 0.0006 (7.423034723582278); it encloses logit(1 - delta), so
  // clamping to {0, 1} outside stays within delta of the true sigmoid.
  const double T = -std::log(delta) / (1.0 - delta);
  const std::function<double(double)> f = [](double x) { return sigmoid(x); };

  // Greedy knots on [0, T]: extend each segment until its minimax error
  // reaches delta/2, i.e. until the chord of the segment deviates by delta.
  std::vector<double> knots{0.0};
  double prev_len = 0.0;
  while (knots.back() < T) {
    const double a = knots.back();
    const double b = grow_segment(f, a, T, 0.5 * delta, prev_len);
    if (!(b > a)) throw std::runtime_error("remez_sigmoid: segment growth stalled");
    prev_len = b - a;
    knots.push_back(b);
  }
  knots.back() = T;

  // Tilted chord values: g(t) = Sig(t) + eta*t/T with eta = Sig(-T), so the
  // approximant interpolates (0, 1/2), (T, 1) and, mirrored, (-T, 0).
  const double eta = sigmoid(-T);
  std::vector<double> values(knots.size());
  for (std::size_t j = 0; j < knots.size(); ++j)
    values[j] = sigmoid(knots[j]) + eta * knots[j] / T;
  values.front() = 0.5;
  values.back() = 1.0;

  // Mirror to [-T, 0]: (x, y) -> (-x, 1 - y).
  std::vector<double> xs, ys;
  for (std::size_t j = knots.size(); j-- > 1;) {
    xs.push_back(-knots[j]);
    ys.push_back(1.0 - values[j]);
  }
  for (std::size_t j = 0; j < knots.size(); ++j) {
    xs.push_back(knots[j]);
    ys.push_back(values[j]);
  }

  std::vector<SigmoidSegment> segments;
  segments.reserve(xs.size() - 1);
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    SigmoidSegment s;
    s.lo = xs[j];
    s.hi = xs[j + 1];
    s.slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    s.intercept = ys[j] - s.slope * xs[j];
    segments.push_back(s);
  }

  PwlSigmoid pwl(delta, T, std::move(segments));

  // Certification: dense grid check of the delta contract. Failure here
  // means the construction above is broken, not a user error.
  const int grid = 40000;
  for (int i = 0; i <= grid; ++i) {
    const double x = -T + 2.0 * T * i / grid;
    const double err = std::fabs(pwl(x) - sigmoid(x));
    if (err > delta * (1.0 + 1e-9))
      throw std::runtime_error("remez_sigmoid failed certification, residual " +
                               std::to_string(err));
  }
  return pwl;
}

double error_bound(std::size_t n, double delta) {
  if (n < 2) throw std::invalid_argument("error_bound requires n >= 2");
  const double root = std::sqrt(static_cast<double>(n - 1)) + 1.0;
  return static_cast<double>(n - 2) / (root * root) + 2.0 * delta;
}

double softmax_gap(std::size_t n, double m) {
  if (n < 2) throw std::invalid_argument("softmax_gap requires n >= 2");
  const double nn = static_cast<double>(n);
  return m * (nn - 2.0) / ((m + 1.0) * ((nn - 1.0) * m + 1.0));
}

double gap_maximizer(std::size_t n) {
  if (n < 2) throw std::invalid_argument("gap_maximizer requires n >= 2");
  return 1.0 / std::sqrt(static_cast<double>(n - 1));
}

SoftmaxBound softmax_bound(std::size_t n, double delta) {
  SoftmaxBound b;
  b.n = n;
  b.delta = delta;
  b.lower_shift = std::log(static_cast<double>(n - 1));
  b.error_bound = error_bound(n, delta);
  return b;
}

namespace {

double max_excluding(std::span<const double> z, std::size_t i) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j)
    if (j != i) best = std::max(best, z[j]);
  return best;
}

}  // namespace

double softmax_hat_lower(std::span<const double> z, std::size_t i, const PwlSigmoid& pwl) {
  if (z.size() < 2) throw std::invalid_argument("need n >= 2 logits");
  if (i >= z.size()) throw std::out_of_range("class index out of range");
  const double shift = std::log(static_cast<double>(z.size() - 1));
  return pwl(z[i] - max_excluding(z, i) - shift) - pwl.delta();
}

double softmax_hat_upper(std::span<const double> z, std::size_t i, const PwlSigmoid& pwl) {
  if (z.size() < 2) throw std::invalid_argument("need n >= 2 logits");
  if (i >= z.size()) throw std::out_of_range("class index out of range");
  return pwl(z[i] - max_excluding(z, i)) + pwl.delta();
}

void dump_segments(const PwlSigmoid& pwl, std::ostream& os) {
  char buf[128];
  for (const SigmoidSegment& s : pwl.segments()) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", s.lo, s.hi, s.slope, s.intercept);
    os << buf;
  }
}

}  // namespace certiglobe
