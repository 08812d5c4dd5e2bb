#include "certiglobe/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certiglobe {

LinearProgram::LinearProgram(std::size_t num_vars)
    : lo_(num_vars, -kInfinity), hi_(num_vars, kInfinity) {}

void LinearProgram::set_bounds(std::size_t var, double lo, double hi) {
  lo_[var] = lo;
  hi_[var] = hi;
}

void LinearProgram::add_row(std::vector<std::pair<std::size_t, double>> terms, Relation rel,
                            double rhs) {
  if (rel == Relation::LT || rel == Relation::GT)
    throw std::invalid_argument("strict relation reached the LP layer");
  rows_.push_back({std::move(terms), rel, rhs});
}

namespace {

constexpr double kFeasSum = 1e-8;  // Phase-I optimum below this counts as feasible

// Full-tableau bounded-variable simplex state. Rows are kept in the
// normalized form x_B[r] + sum_j T[r][j] x_j = 0 over nonbasic j.
struct Tableau {
  std::size_t m = 0, cols = 0;
  std::vector<double> t;    // m x cols
  std::vector<double> z;    // reduced costs
  std::vector<double> x;    // current values, all columns
  std::vector<double> lo, hi;
  std::vector<int> basic;   // row -> column
  std::vector<int> row_of;  // column -> row, -1 if nonbasic
  std::size_t pivots = 0;

  double& at(std::size_t r, std::size_t c) { return t[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return t[r * cols + c]; }

  void recompute_basics() {
    for (std::size_t r = 0; r < m; ++r) {
      double v = 0.0;
      for (std::size_t j = 0; j < cols; ++j)
        if (row_of[j] < 0) v -= at(r, j) * x[j];
      x[basic[r]] = v;
    }
  }

  void reprice(const std::vector<double>& cost) {
    z = cost;
    for (std::size_t r = 0; r < m; ++r) {
      const double cb = cost[basic[r]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) z[j] -= cb * at(r, j);
    }
  }

  // One simplex pass for the current reduced costs. Returns true when an
  // optimum was reached, false on hitting the pivot budget.
  bool iterate(std::size_t max_pivots) {
    std::size_t since_refresh = 0;
    while (true) {
      if (pivots >= max_pivots) return false;

      // Bland: smallest-index eligible entering column.
      std::size_t enter = cols;
      int dir = 0;
      for (std::size_t j = 0; j < cols; ++j) {
        if (row_of[j] >= 0 || lo[j] == hi[j]) continue;
        if (z[j] < -kPivotTolerance && x[j] < hi[j]) {
          enter = j;
          dir = 1;
          break;
        }
        if (z[j] > kPivotTolerance && x[j] > lo[j]) {
          enter = j;
          dir = -1;
          break;
        }
      }
      if (enter == cols) return true;

      // Ratio test: smallest step that drives a basic variable (or the
      // entering variable itself) to a bound. Bland tie-break on the
      // leaving variable index.
      double limit = dir > 0 ? hi[enter] - x[enter] : x[enter] - lo[enter];
      if (limit < 0.0) limit = 0.0;
      std::size_t block_row = m;  // m means the entering column blocks itself
      for (std::size_t r = 0; r < m; ++r) {
        const double a = at(r, enter);
        if (std::fabs(a) <= kPivotTolerance) continue;
        const double step = -a * dir;  // change of x_B[r] per unit increase
        const int bvar = basic[r];
        double room;
        if (step > 0.0)
          room = hi[bvar] == kInfinity ? kInfinity : hi[bvar] - x[bvar];
        else
          room = lo[bvar] == -kInfinity ? kInfinity : x[bvar] - lo[bvar];
        if (room == kInfinity) continue;
        const double lim = std::max(0.0, room) / std::fabs(step);
        if (lim < limit - 1e-12 ||
            (lim <= limit + 1e-12 && block_row < m && bvar < basic[block_row])) {
          limit = lim;
          block_row = r;
        }
      }

      if (limit == kInfinity) return true;  // unbounded direction; nothing to fix here

      const double delta = dir * limit;
      for (std::size_t r = 0; r < m; ++r) {
        const double a = at(r, enter);
        if (a != 0.0) x[basic[r]] -= a * delta;
      }
      x[enter] += delta;
      ++pivots;

      if (block_row == m) continue;  // bound flip, basis unchanged

      const int leave = basic[block_row];
      // Snap the leaving variable onto the bound that blocked.
      const double a = at(block_row, enter);
      x[leave] = (-a * dir) > 0.0 ? hi[leave] : lo[leave];

      // Pivot on (block_row, enter).
      const double piv = at(block_row, enter);
      double* prow = &t[block_row * cols];
      const double inv = 1.0 / piv;
      for (std::size_t j = 0; j < cols; ++j) prow[j] *= inv;
      for (std::size_t r = 0; r < m; ++r) {
        if (r == block_row) continue;
        const double f = at(r, enter);
        if (f == 0.0) continue;
        double* row = &t[r * cols];
        for (std::size_t j = 0; j < cols; ++j) row[j] -= f * prow[j];
        row[enter] = 0.0;
      }
      {
        const double f = z[enter];
        if (f != 0.0) {
          for (std::size_t j = 0; j < cols; ++j) z[j] -= f * prow[j];
          z[enter] = 0.0;
        }
      }
      basic[block_row] = static_cast<int>(enter);
      row_of[enter] = static_cast<int>(block_row);
      row_of[leave] = -1;

      if (++since_refresh >= 128) {
        since_refresh = 0;
        recompute_basics();
      }
    }
  }
};

}  // namespace

LpResult LinearProgram::solve(std::optional<std::size_t> maximize_var,
                              std::size_t max_pivots) const {
  const std::size_t n = num_vars();
  const std::size_t m = rows_.size();

  Tableau tab;
  tab.m = m;
  tab.cols = n + 2 * m;  // structural + slack + (up to) one artificial per row
  tab.t.assign(m * tab.cols, 0.0);
  tab.lo.assign(tab.cols, 0.0);
  tab.hi.assign(tab.cols, 0.0);
  tab.x.assign(tab.cols, 0.0);
  tab.basic.assign(m, -1);
  tab.row_of.assign(tab.cols, -1);

  for (std::size_t j = 0; j < n; ++j) {
    tab.lo[j] = lo_[j];
    tab.hi[j] = hi_[j];
    if (lo_[j] > hi_[j]) return {LpStatus::Infeasible, {}, 0};
    double v = 0.0;
    v = std::max(v, lo_[j] == -kInfinity ? v : lo_[j]);
    v = std::min(v, hi_[j] == kInfinity ? v : hi_[j]);
    if (lo_[j] != -kInfinity && v < lo_[j]) v = lo_[j];
    tab.x[j] = v;
  }

  std::vector<double> cost(tab.cols, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const Row& row = rows_[r];
    double value = 0.0;
    for (const auto& [var, coef] : row.terms) {
      tab.at(r, var) += coef;
      value += coef * tab.x[var];
    }
    const std::size_t slack = n + r;
    const std::size_t art = n + m + r;
    tab.at(r, slack) = -1.0;
    switch (row.rel) {
      case Relation::LE:
        tab.lo[slack] = -kInfinity;
        tab.hi[slack] = row.rhs;
        break;
      case Relation::GE:
        tab.lo[slack] = row.rhs;
        tab.hi[slack] = kInfinity;
        break;
      default:
        tab.lo[slack] = row.rhs;
        tab.hi[slack] = row.rhs;
        break;
    }
    const double clamped = std::clamp(value, tab.lo[slack], tab.hi[slack]);
    const double residual = value - clamped;
    if (residual == 0.0) {
      // slack absorbs the row exactly; make it basic with coefficient +1
      tab.basic[r] = static_cast<int>(slack);
      tab.row_of[slack] = static_cast<int>(r);
      tab.x[slack] = value;
      tab.lo[art] = 0.0;
      tab.hi[art] = 0.0;  // unused artificial stays fixed at zero
      for (std::size_t j = 0; j < tab.cols; ++j) tab.at(r, j) = -tab.at(r, j);
    } else {
      const double sign = residual > 0.0 ? 1.0 : -1.0;
      tab.at(r, art) = -sign;
      tab.x[slack] = clamped;
      tab.x[art] = std::fabs(residual);
      tab.lo[art] = 0.0;
      tab.hi[art] = kInfinity;
      cost[art] = 1.0;
      tab.basic[r] = static_cast<int>(art);
      tab.row_of[art] = static_cast<int>(r);
      if (sign > 0.0)
        for (std::size_t j = 0; j < tab.cols; ++j) tab.at(r, j) = -tab.at(r, j);
    }
  }

  tab.reprice(cost);
  const bool finished = tab.iterate(max_pivots);

  double infeasibility = 0.0;
  for (std::size_t r = 0; r < m; ++r) infeasibility += tab.x[n + m + r];
  if (!finished && infeasibility > kFeasSum) return {LpStatus::IterationLimit, {}, tab.pivots};
  if (infeasibility > kFeasSum) return {LpStatus::Infeasible, {}, tab.pivots};

  if (maximize_var && m > 0) {
    // Pin artificials and push the objective variable upward.
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t art = n + m + r;
      tab.lo[art] = 0.0;
      tab.hi[art] = 0.0;
      if (tab.row_of[art] < 0) tab.x[art] = 0.0;
    }
    std::fill(cost.begin(), cost.end(), 0.0);
    cost[*maximize_var] = -1.0;
    tab.reprice(cost);
    tab.iterate(max_pivots);  // best effort; feasibility is preserved
  }

  tab.recompute_basics();
  LpResult res;
  res.status = LpStatus::Feasible;
  res.pivots = tab.pivots;
  res.assignment.assign(tab.x.begin(), tab.x.begin() + static_cast<long>(n));
  return res;
}

}  // namespace certiglobe
