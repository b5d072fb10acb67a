#pragma once

// Queue predictors q^_{i,e}(theta; theta_bar; q). A prediction made at
// theta_bar is a piecewise-linear function of the query time theta >= theta_bar,
// constant left of theta_bar.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dpe/network.hpp"
#include "dpe/pwl.hpp"
#include "dpe/regression.hpp"

namespace dpe {

struct PredictedQueue {
  EdgeId edge = 0;
  double prediction_time = 0.0;
  PiecewiseLinearFn function;
};

// Read-only view of the queues observed up to `observed_until`.
struct QueueHistory {
  std::span<const PiecewiseLinearFn> queues;
  double observed_until = 0.0;

  // q_e(t). Times before 0 read as q_e(0); times after observed_until throw.
  [[nodiscard]] double at(EdgeId e, double t) const;
};

// (q0 + slope * min(theta - start, horizon))^+ as a function of theta >= start.
[[nodiscard]] PiecewiseLinearFn clamped_ramp(double start, double q0, double slope, double horizon);

[[nodiscard]] PredictedQueue predict_zero(EdgeId e, double prediction_time, const QueueHistory& history);
[[nodiscard]] PredictedQueue predict_constant(EdgeId e, double prediction_time, const QueueHistory& history);
// Uses the left derivative of q_e at prediction_time (0 at time 0).
[[nodiscard]] PredictedQueue predict_linear(EdgeId e, double prediction_time, const QueueHistory& history,
                                            double horizon);
[[nodiscard]] PredictedQueue predict_reg_linear(EdgeId e, double prediction_time, const QueueHistory& history,
                                                double delta, double horizon);
// q_e(theta_bar) below `threshold`, otherwise the constant `value`.
[[nodiscard]] PredictedQueue predict_threshold(EdgeId e, double prediction_time, const QueueHistory& history,
                                               double threshold, double value);
// `fifo_fixes`, when given, is incremented for every predicted point raised
// to keep the predicted exit time non-decreasing.
[[nodiscard]] PredictedQueue predict_regression(const RegressionModel& model, const Network& network, EdgeId e,
                                                double prediction_time, const QueueHistory& history,
                                                std::size_t* fifo_fixes = nullptr);

enum class EvaluationMode : std::uint8_t { kLive, kPostHoc };

// The true queue from prediction_time on. Only available post hoc: the
// predictor reads the future, so calling it in kLive mode throws.
[[nodiscard]] PredictedQueue predict_perfect(EdgeId e, double prediction_time, const PiecewiseLinearFn& full_queue,
                                             EvaluationMode mode);

class Predictor {
 public:
  virtual ~Predictor() = default;
  [[nodiscard]] virtual PredictorKind kind() const = 0;
  [[nodiscard]] virtual bool is_oblivious() const { return true; }
  [[nodiscard]] virtual PredictedQueue predict(const Network& network, EdgeId e, double prediction_time,
                                               const QueueHistory& history) const = 0;
  [[nodiscard]] std::vector<PredictedQueue> predict_all(const Network& network, double prediction_time,
                                                        const QueueHistory& history) const;
};

// Throws PreconditionError for kRegression without a model and for kPerfect
// (use PerfectPredictor directly).
[[nodiscard]] std::unique_ptr<Predictor> make_predictor(PredictorKind kind, const PredictorParams& params,
                                                        std::shared_ptr<const RegressionModel> model = nullptr);

class PerfectPredictor final : public Predictor {
 public:
  PerfectPredictor(std::vector<PiecewiseLinearFn> full_queues, EvaluationMode mode)
      : full_(std::move(full_queues)), mode_(mode) {}
  [[nodiscard]] PredictorKind kind() const override { return PredictorKind::kPerfect; }
  [[nodiscard]] bool is_oblivious() const override { return false; }
  [[nodiscard]] PredictedQueue predict(const Network& network, EdgeId e, double prediction_time,
                                       const QueueHistory& history) const override;

 private:
  std::vector<PiecewiseLinearFn> full_;
  EvaluationMode mode_;
};

}  // namespace dpe
