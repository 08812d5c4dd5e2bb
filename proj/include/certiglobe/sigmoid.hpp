#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace certiglobe {

double sigmoid(double x);
double logit(double p);

/// One linear piece of the sigmoid approximation, valid on [lo, hi].
struct SigmoidSegment {
  double lo = 0.0;
  double hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;

  double at(double x) const { return slope * x + intercept; }
};

/// Piecewise-linear sigmoid with certified error bound delta.
///
/// Segments tile the symmetric domain [domain_lo, domain_hi] contiguously.
/// The approximant is continuous and monotone, equals 0 at domain_lo and 1
/// at domain_hi, is convex left of 0 and concave right of 0. Outside the
/// domain it clamps to 0 and 1; |value - Sig(x)| <= delta holds everywhere.
class PwlSigmoid {
 public:
  PwlSigmoid(double delta, double domain_hi, std::vector<SigmoidSegment> segments);

  double delta() const { return delta_; }
  double domain_lo() const { return -domain_hi_; }
  double domain_hi() const { return domain_hi_; }
  std::span<const SigmoidSegment> segments() const { return segments_; }

  double operator()(double x) const;

 private:
  double delta_;
  double domain_hi_;
  std::vector<SigmoidSegment> segments_;
};

/// Best L-inf line fit of `f` on [a, b], found by the Remez exchange
/// iteration on three alternating references. `error` is the certified
/// maximum deviation measured on a refined grid.
struct MinimaxLine {
  double slope = 0.0;
  double intercept = 0.0;
  double error = 0.0;
};

MinimaxLine remez_minimax_line(const std::function<double(double)>& f, double a, double b,
                               std::size_t max_iterations = 60);

/// Builds the delta-accurate piecewise-linear sigmoid.
///
/// Segment knots are placed by greedy splitting: each segment is grown until
/// its minimax (Remez) fit error reaches delta/2. The emitted lines are the
/// chords of the tilted target Sig(x) + eta*x/T, which keeps the approximant
/// continuous with exact endpoint values 0 and 1 while staying within delta.
/// Throws std::runtime_error if the dense-grid certification fails.
PwlSigmoid remez_sigmoid(double delta);

double sig_hat(const PwlSigmoid& pwl, double x);

/// Error-bound constants of the softmax over-approximation.
struct SoftmaxBound {
  std::size_t n = 2;
  double delta = 0.0;
  double lower_shift = 0.0;  ///< log(n - 1)
  double error_bound = 0.0;  ///< b_{n,delta}
};

SoftmaxBound softmax_bound(std::size_t n, double delta);

/// b_{n,delta} = (n-2)/(sqrt(n-1)+1)^2 + 2*delta; equals 2*delta for n = 2.
double error_bound(std::size_t n, double delta);

/// Gap function zeta_n(m) = m(n-2) / ((m+1)((n-1)m+1)) for m in (0, 1].
double softmax_gap(std::size_t n, double m);

/// Maximizer of the gap function, 1/sqrt(n-1).
double gap_maximizer(std::size_t n);

/// Certified lower bound on softmax(z)_i: SigHat(z_i - max_{j!=i} z_j - log(n-1)) - delta.
double softmax_hat_lower(std::span<const double> z, std::size_t i, const PwlSigmoid& pwl);

/// Certified upper bound on softmax(z)_i: SigHat(z_i - max_{j!=i} z_j) + delta.
double softmax_hat_upper(std::span<const double> z, std::size_t i, const PwlSigmoid& pwl);

/// Audit table, one "lo hi slope intercept" line per segment.
void dump_segments(const PwlSigmoid& pwl, std::ostream& os);

}  // namespace certiglobe
