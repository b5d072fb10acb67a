#include "dpe/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpe/errors.hpp"

namespace dpe {
namespace {

// Breakpoints closer than this (relative) are merged. Kept well below
// kNumericTolerance so that merging never hides a kink of a lower envelope.
constexpr double kTimeMergeTolerance = 1e-12;

// Relative value slack for collinearity and touching; labels feed an absolute
// activity test, so lossless operations must stay far below it.
constexpr double kValueTolerance = 1e-12;

bool close(double a, double b) { return std::abs(a - b) <= kTimeMergeTolerance * std::max(1.0, std::abs(a)); }

// Sorted union of two sorted sequences, merging near-equal entries.
std::vector<double> merge_times(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  std::vector<double> dedup;
  dedup.reserve(out.size());
  for (double t : out) {
    if (dedup.empty() || !close(dedup.back(), t)) dedup.push_back(t);
  }
  return dedup;
}

void sort_unique(std::vector<double>& ts) {
  std::sort(ts.begin(), ts.end());
  std::vector<double> dedup;
  dedup.reserve(ts.size());
  for (double t : ts) {
    if (dedup.empty() || !close(dedup.back(), t)) dedup.push_back(t);
  }
  ts = std::move(dedup);
}

}  // namespace

// ---------------------------------------------------------------------------
// RightConstantFn

RightConstantFn::RightConstantFn(std::vector<double> times, std::vector<double> values, double domain_start)
    : domain_start_(domain_start) {
  if (times.size() != values.size()) throw PreconditionError("RightConstantFn: times/values size mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw PreconditionError("RightConstantFn: breakpoint times must be strictly increasing");
    }
  }
  if (!times.empty() && times.front() < domain_start - kNumericTolerance) {
    throw PreconditionError("RightConstantFn: breakpoint before domain start");
  }
  times_ = std::move(times);
  values_ = std::move(values);
}

double RightConstantFn::eval(double t) const {
  if (t < domain_start_ - kNumericTolerance) {
    throw DomainError("RightConstantFn::eval: time " + std::to_string(t) + " before domain start " +
                      std::to_string(domain_start_));
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

void RightConstantFn::append(double time, double value) {
  if (times_.empty()) {
    if (time < domain_start_ - kNumericTolerance) throw PreconditionError("RightConstantFn::append before domain");
    if (value == 0.0) return;
    times_.push_back(time);
    values_.push_back(value);
    return;
  }
  if (time < times_.back() - kNumericTolerance) {
    throw PreconditionError("RightConstantFn::append: time " + std::to_string(time) + " before last breakpoint " +
                            std::to_string(times_.back()));
  }
  if (time <= times_.back() + kNumericTolerance) {
    values_.back() = value;
    const double prev = values_.size() >= 2 ? values_[values_.size() - 2] : 0.0;
    if (prev == value) {
      times_.pop_back();
      values_.pop_back();
    }
    return;
  }
  if (value == values_.back()) return;
  times_.push_back(time);
  values_.push_back(value);
}

double RightConstantFn::integrate(double a, double b) const {
  if (a > b) throw PreconditionError("RightConstantFn::integrate: a > b");
  if (a < domain_start_ - kNumericTolerance) throw DomainError("RightConstantFn::integrate: a before domain start");
  double total = 0.0;
  double cur = a;
  double rate = eval(a);
  auto it = std::upper_bound(times_.begin(), times_.end(), a);
  for (; it != times_.end() && *it < b; ++it) {
    total += rate * (*it - cur);
    cur = *it;
    rate = values_[static_cast<std::size_t>(it - times_.begin())];
  }
  total += rate * (b - cur);
  return total;
}

PiecewiseLinearFn RightConstantFn::cumulative() const {
  std::vector<double> ts{domain_start_};
  std::vector<double> vs{0.0};
  double acc = 0.0;
  double rate = 0.0;
  double cur = domain_start_;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (times_[k] > cur) {
      acc += rate * (times_[k] - cur);
      ts.push_back(times_[k]);
      vs.push_back(acc);
      cur = times_[k];
    }
    rate = values_[k];
  }
  return {std::move(ts), std::move(vs), 0.0, rate};
}

std::optional<double> RightConstantFn::next_breakpoint_after(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t + kNumericTolerance);
  if (it == times_.end()) return std::nullopt;
  return *it;
}

RightConstantFn sum(std::span<const RightConstantFn> fs) {
  if (fs.empty()) return {};
  const double start = fs.front().domain_start();
  std::vector<double> grid;
  for (const auto& f : fs) grid.insert(grid.end(), f.times().begin(), f.times().end());
  sort_unique(grid);
  RightConstantFn out(start);
  for (double t : grid) {
    double v = 0.0;
    for (const auto& f : fs) v += f.eval(t);
    out.append(t, v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PiecewiseLinearFn

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> times, std::vector<double> values, double slope_before,
                                     double slope_after)
    : times_(std::move(times)), values_(std::move(values)), slope_before_(slope_before), slope_after_(slope_after) {
  if (times_.empty()) throw PreconditionError("PiecewiseLinearFn: needs at least one breakpoint");
  if (times_.size() != values_.size()) throw PreconditionError("PiecewiseLinearFn: times/values size mismatch");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw PreconditionError("PiecewiseLinearFn: breakpoint times must be strictly increasing");
    }
  }
}

double PiecewiseLinearFn::eval(double t) const {
  if (t <= times_.front()) return values_.front() + slope_before_ * (t - times_.front());
  if (t >= times_.back()) return values_.back() + slope_after_ * (t - times_.back());
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto k = static_cast<std::size_t>(it - times_.begin());
  const double t0 = times_[k - 1];
  const double t1 = times_[k];
  const double v0 = values_[k - 1];
  const double v1 = values_[k];
  // Anchor at the nearer breakpoint so a distant one does not cost absolute precision.
  if (t - t0 <= t1 - t) return v0 + (v1 - v0) * ((t - t0) / (t1 - t0));
  return v1 - (v1 - v0) * ((t1 - t) / (t1 - t0));
}

double PiecewiseLinearFn::slope_left_of(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t - kNumericTolerance);
  const auto k = static_cast<std::size_t>(it - times_.begin());
  if (k == 0) return slope_before_;
  if (k == times_.size()) return slope_after_;
  return (values_[k] - values_[k - 1]) / (times_[k] - times_[k - 1]);
}

double PiecewiseLinearFn::slope_right_of(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t + kNumericTolerance);
  const auto k = static_cast<std::size_t>(it - times_.begin());
  if (k == 0) return slope_before_;
  if (k == times_.size()) return slope_after_;
  return (values_[k] - values_[k - 1]) / (times_[k] - times_[k - 1]);
}

void PiecewiseLinearFn::append(double time, double value) {
  if (time < times_.back() - kNumericTolerance) {
    throw PreconditionError("PiecewiseLinearFn::append: time before last breakpoint");
  }
  if (time <= times_.back() + kNumericTolerance) {
    values_.back() = value;
    return;
  }
  const std::size_t n = times_.size();
  if (n >= 2) {
    const double t0 = times_[n - 2];
    const double v0 = values_[n - 2];
    const double t1 = times_[n - 1];
    const double v1 = values_[n - 1];
    const double interp = v0 + (value - v0) * ((t1 - t0) / (time - t0));
    if (std::abs(interp - v1) <= kValueTolerance * std::max(1.0, std::abs(v1))) {
      times_.back() = time;
      values_.back() = value;
      return;
    }
  }
  times_.push_back(time);
  values_.push_back(value);
}

PiecewiseLinearFn PiecewiseLinearFn::scaled(double a, double b) const {
  std::vector<double> vs(values_.size());
  std::transform(values_.begin(), values_.end(), vs.begin(), [&](double v) { return a * v + b; });
  return {times_, std::move(vs), a * slope_before_, a * slope_after_};
}

PiecewiseLinearFn PiecewiseLinearFn::plus_identity() const {
  std::vector<double> vs(values_.size());
  for (std::size_t k = 0; k < vs.size(); ++k) vs[k] = values_[k] + times_[k];
  return {times_, std::move(vs), slope_before_ + 1.0, slope_after_ + 1.0};
}

PiecewiseLinearFn PiecewiseLinearFn::restrict_from(double t0) const {
  if (t0 <= times_.front() + kNumericTolerance) return *this;
  std::vector<double> ts{t0};
  std::vector<double> vs{eval(t0)};
  const double first_slope = slope_right_of(t0);
  auto it = std::upper_bound(times_.begin(), times_.end(), t0 + kNumericTolerance);
  for (auto k = static_cast<std::size_t>(it - times_.begin()); k < times_.size(); ++k) {
    ts.push_back(times_[k]);
    vs.push_back(values_[k]);
  }
  return {std::move(ts), std::move(vs), first_slope, slope_after_};
}

PiecewiseLinearFn PiecewiseLinearFn::truncate_after(double t1) const {
  std::vector<double> ts;
  std::vector<double> vs;
  for (std::size_t k = 0; k < times_.size() && times_[k] < t1 - kNumericTolerance; ++k) {
    ts.push_back(times_[k]);
    vs.push_back(values_[k]);
  }
  ts.push_back(t1);
  vs.push_back(eval(t1));
  return {std::move(ts), std::move(vs), slope_before_, 0.0};
}

bool PiecewiseLinearFn::is_non_decreasing(double tol) const {
  if (slope_before_ < -tol || slope_after_ < -tol) return false;
  for (std::size_t k = 1; k < times_.size(); ++k) {
    const double slope = (values_[k] - values_[k - 1]) / (times_[k] - times_[k - 1]);
    if (slope < -tol) return false;
  }
  return true;
}

double PiecewiseLinearFn::integrate(double a, double b) const {
  if (a > b) throw PreconditionError("PiecewiseLinearFn::integrate: a > b");
  std::vector<double> grid{a};
  for (double t : times_) {
    if (t > a && t < b) grid.push_back(t);
  }
  grid.push_back(b);
  double total = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    total += 0.5 * (eval(grid[k - 1]) + eval(grid[k])) * (grid[k] - grid[k - 1]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Free operations

PiecewiseLinearFn compose_monotone(const PiecewiseLinearFn& outer, const PiecewiseLinearFn& inner) {
  if (!inner.is_non_decreasing()) {
    throw PreconditionError("compose_monotone: inner function must be non-decreasing");
  }
  const auto& its = inner.times();
  const auto& ivs = inner.values();
  const std::size_t n = its.size();

  std::vector<double> candidates(its.begin(), its.end());
  // Preimages of the outer breakpoints under inner. Both sequences are sorted,
  // so a single forward walk over inner's segments suffices.
  std::size_t seg = 0;
  for (double x : outer.times()) {
    if (x < ivs.front()) {
      if (inner.slope_before() > 0.0) candidates.push_back(its.front() + (x - ivs.front()) / inner.slope_before());
      continue;
    }
    if (x > ivs.back()) {
      if (inner.slope_after() > 0.0) candidates.push_back(its.back() + (x - ivs.back()) / inner.slope_after());
      continue;
    }
    while (seg + 1 < n && ivs[seg + 1] < x) ++seg;
    if (seg + 1 >= n) continue;
    const double v0 = ivs[seg];
    const double v1 = ivs[seg + 1];
    if (v1 > v0 && x > v0 && x < v1) {
      candidates.push_back(its[seg] + (x - v0) / (v1 - v0) * (its[seg + 1] - its[seg]));
    }
  }
  sort_unique(candidates);

  std::vector<double> vs(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) vs[k] = outer.eval(inner.eval(candidates[k]));

  const double before =
      inner.slope_before() == 0.0 ? 0.0 : inner.slope_before() * outer.slope_left_of(inner.eval(candidates.front()));
  const double after =
      inner.slope_after() == 0.0 ? 0.0 : inner.slope_after() * outer.slope_right_of(inner.eval(candidates.back()));
  return prune(PiecewiseLinearFn(std::move(candidates), std::move(vs), before, after));
}

PiecewiseLinearFn pointwise_min(const PiecewiseLinearFn& f, const PiecewiseLinearFn& g) {
  std::vector<double> grid = merge_times(f.times(), g.times());
  std::vector<double> crossings;

  auto diff = [&](double t) { return f.eval(t) - g.eval(t); };
  auto tol_at = [](double v) { return kValueTolerance * std::max(1.0, std::abs(v)); };

  // Tail slopes equal up to rounding count as parallel; otherwise their far-away
  // crossing would stretch one segment over an astronomically long interval.
  auto parallel = [](double s, double r) {
    return std::abs(s - r) <= kValueTolerance * std::max({1.0, std::abs(s), std::abs(r)});
  };
  const bool left_parallel = parallel(f.slope_before(), g.slope_before());
  const bool right_parallel = parallel(f.slope_after(), g.slope_after());

  // Left tail: both functions follow their slope_before.
  const double t0 = grid.front();
  const double d0 = diff(t0);
  if (!left_parallel && std::abs(d0) > tol_at(f.eval(t0))) {
    const double tc = t0 - d0 / (f.slope_before() - g.slope_before());
    if (tc < t0) crossings.push_back(tc);
  }
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k];
    const double b = grid[k + 1];
    const double da = diff(a);
    const double db = diff(b);
    if (std::abs(da) <= tol_at(f.eval(a)) || std::abs(db) <= tol_at(f.eval(b))) continue;
    if ((da < 0.0) != (db < 0.0)) crossings.push_back(a + da / (da - db) * (b - a));
  }
  const double tn = grid.back();
  const double dn = diff(tn);
  if (!right_parallel && std::abs(dn) > tol_at(f.eval(tn))) {
    const double tc = tn - dn / (f.slope_after() - g.slope_after());
    if (tc > tn) crossings.push_back(tc);
  }
  if (!crossings.empty()) {
    grid.insert(grid.end(), crossings.begin(), crossings.end());
    sort_unique(grid);
  }

  std::vector<double> vs(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) vs[k] = std::min(f.eval(grid[k]), g.eval(grid[k]));

  // Towards -inf the larger slope ends up lower; towards +inf the smaller one.
  // Parallel tails keep the slope of the lower function.
  const double before = left_parallel ? (d0 <= 0.0 ? f.slope_before() : g.slope_before())
                                      : std::max(f.slope_before(), g.slope_before());
  const double after = right_parallel ? (dn <= 0.0 ? f.slope_after() : g.slope_after())
                                      : std::min(f.slope_after(), g.slope_after());
  return prune(PiecewiseLinearFn(std::move(grid), std::move(vs), before, after));
}

PiecewiseLinearFn pointwise_min(std::span<const PiecewiseLinearFn> fs) {
  if (fs.empty()) throw PreconditionError("pointwise_min: empty list");
  PiecewiseLinearFn acc = fs.front();
  for (std::size_t k = 1; k < fs.size(); ++k) acc = pointwise_min(acc, fs[k]);
  return acc;
}

PiecewiseLinearFn prune(const PiecewiseLinearFn& f, double eps) {
  if (eps < 0.0) throw PreconditionError("prune: eps must be non-negative");
  const auto& ts = f.times();
  const auto& vs = f.values();
  const std::size_t n = ts.size();
  if (n <= 2) return f;

  std::vector<double> out_t{ts.front()};
  std::vector<double> out_v{vs.front()};
  std::size_t anchor = 0;
  // Slopes from the anchor that keep every skipped point within its allowed deviation.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = ts[k] - ts[anchor];
    const double slope = (vs[k] - vs[anchor]) / dt;
    if (k > anchor + 1 && (slope < lo || slope > hi)) {
      anchor = k - 1;
      out_t.push_back(ts[anchor]);
      out_v.push_back(vs[anchor]);
      lo = -std::numeric_limits<double>::infinity();
      hi = std::numeric_limits<double>::infinity();
    }
    const double allowed = std::max(eps, kValueTolerance * std::max(1.0, std::abs(vs[k])));
    const double dk = ts[k] - ts[anchor];
    lo = std::max(lo, (vs[k] - allowed - vs[anchor]) / dk);
    hi = std::min(hi, (vs[k] + allowed - vs[anchor]) / dk);
  }
  out_t.push_back(ts.back());
  out_v.push_back(vs.back());
  return {std::move(out_t), std::move(out_v), f.slope_before(), f.slope_after()};
}

bool dips_below(const PiecewiseLinearFn& f, const PiecewiseLinearFn& g, double from, double tol) {
  std::vector<double> grid = merge_times(f.times(), g.times());
  auto below = [&](double t) {
    const double gv = g.eval(t);
    return f.eval(t) < gv - tol * std::max(1.0, std::abs(gv));
  };
  if (below(from)) return true;
  for (double t : grid) {
    if (t >= from && below(t)) return true;
  }
  return f.slope_after() < g.slope_after() - tol;
}

}  // namespace dpe
