#pragma once

// Piecewise-defined scalar functions of time.
//
// RightConstantFn holds step functions (flow rates), PiecewiseLinearFn holds
// continuous piecewise-linear functions (queues, cumulative flows, exit times,
// labels). Both are value types; every operation below is pure.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dpe {

// Comparison tolerance for breakpoint dedup and crossing detection.
inline constexpr double kNumericTolerance = 1e-9;

class PiecewiseLinearFn;

// Right-continuous step function on [domain_start, inf). The value at t is
// the value of the last breakpoint <= t, and 0 before the first breakpoint.
class RightConstantFn {
 public:
  RightConstantFn() = default;
  explicit RightConstantFn(double domain_start) : domain_start_(domain_start) {}
  RightConstantFn(std::vector<double> times, std::vector<double> values, double domain_start = 0.0);

  [[nodiscard]] double eval(double t) const;

  // Appends a step at `time` (>= last breakpoint). A step at the same time
  // replaces the last value; a step that does not change the value is dropped.
  void append(double time, double value);

  [[nodiscard]] double integrate(double a, double b) const;
  // The cumulative integral from domain_start as a piecewise-linear function.
  [[nodiscard]] PiecewiseLinearFn cumulative() const;

  // First breakpoint strictly after t (plus tolerance).
  [[nodiscard]] std::optional<double> next_breakpoint_after(double t) const;

  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] double domain_start() const { return domain_start_; }
  [[nodiscard]] bool empty() const { return times_.empty(); }
  [[nodiscard]] std::size_t size() const { return times_.size(); }
  [[nodiscard]] double last_value() const { return values_.empty() ? 0.0 : values_.back(); }

  friend bool operator==(const RightConstantFn&, const RightConstantFn&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double domain_start_ = 0.0;
};

// Pointwise sum of step functions sharing a domain start.
[[nodiscard]] RightConstantFn sum(std::span<const RightConstantFn> fs);

// Continuous piecewise-linear function on the whole real line: linear
// interpolation between breakpoints, linear extrapolation with the stated
// slopes outside of them.
class PiecewiseLinearFn {
 public:
  // The zero function.
  PiecewiseLinearFn() : times_{0.0}, values_{0.0} {}
  PiecewiseLinearFn(std::vector<double> times, std::vector<double> values, double slope_before = 0.0,
                    double slope_after = 0.0);

  static PiecewiseLinearFn constant(double value, double at = 0.0) { return {{at}, {value}, 0.0, 0.0}; }
  static PiecewiseLinearFn identity(double at = 0.0) { return {{at}, {at}, 1.0, 1.0}; }

  [[nodiscard]] double eval(double t) const;
  [[nodiscard]] double operator()(double t) const { return eval(t); }

  // Slope of the linear piece immediately left (right) of t.
  [[nodiscard]] double slope_left_of(double t) const;
  [[nodiscard]] double slope_right_of(double t) const;

  // Appends a breakpoint after the last one, merging collinear points.
  void append(double time, double value);
  void set_slope_after(double s) { slope_after_ = s; }

  // a * f + b
  [[nodiscard]] PiecewiseLinearFn scaled(double a, double b) const;
  // t -> f(t) + t
  [[nodiscard]] PiecewiseLinearFn plus_identity() const;

  // Same values on [t0, inf); linear continuation of the first piece before t0.
  [[nodiscard]] PiecewiseLinearFn restrict_from(double t0) const;
  // Same values on (-inf, t1]; constant f(t1) afterwards.
  [[nodiscard]] PiecewiseLinearFn truncate_after(double t1) const;

  [[nodiscard]] bool is_non_decreasing(double tol = kNumericTolerance) const;
  [[nodiscard]] double integrate(double a, double b) const;

  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] double slope_before() const { return slope_before_; }
  [[nodiscard]] double slope_after() const { return slope_after_; }
  [[nodiscard]] std::size_t size() const { return times_.size(); }
  [[nodiscard]] double first_time() const { return times_.front(); }
  [[nodiscard]] double last_time() const { return times_.back(); }
  [[nodiscard]] double last_value() const { return values_.back(); }

  friend bool operator==(const PiecewiseLinearFn&, const PiecewiseLinearFn&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double slope_before_ = 0.0;
  double slope_after_ = 0.0;
};

// outer o inner. Throws PreconditionError if inner decreases anywhere.
[[nodiscard]] PiecewiseLinearFn compose_monotone(const PiecewiseLinearFn& outer, const PiecewiseLinearFn& inner);

// Exact lower envelope. Throws PreconditionError on an empty list.
[[nodiscard]] PiecewiseLinearFn pointwise_min(std::span<const PiecewiseLinearFn> fs);
[[nodiscard]] PiecewiseLinearFn pointwise_min(const PiecewiseLinearFn& f, const PiecewiseLinearFn& g);

// Drops breakpoints while staying within eps of f in the uniform norm.
// eps == 0 removes collinear breakpoints only.
[[nodiscard]] PiecewiseLinearFn prune(const PiecewiseLinearFn& f, double eps = 0.0);

// True if f < g - tol somewhere on [from, inf).
[[nodiscard]] bool dips_below(const PiecewiseLinearFn& f, const PiecewiseLinearFn& g, double from,
                              double tol = kNumericTolerance);

}  // namespace dpe
