#include "dpe/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpe/errors.hpp"

namespace dpe {

double QueueHistory::at(EdgeId e, double t) const {
  if (t > observed_until + kNumericTolerance) {
    throw PreconditionError("queue history is only observed up to " + std::to_string(observed_until) +
                            ", requested " + std::to_string(t));
  }
  return queues[e].eval(std::max(t, 0.0));
}

PiecewiseLinearFn clamped_ramp(double start, double q0, double slope, double horizon) {
  q0 = std::max(q0, 0.0);
  if (slope == 0.0 || horizon == 0.0) return PiecewiseLinearFn::constant(q0, start);
  if (slope < 0.0) {
    const double zero_at = q0 / -slope;
    if (zero_at < horizon) {
      if (zero_at == 0.0) return PiecewiseLinearFn::constant(0.0, start);
      return {{start, start + zero_at}, {q0, 0.0}, 0.0, 0.0};
    }
  }
  if (std::isinf(horizon)) return {{start}, {q0}, 0.0, slope};
  return {{start, start + horizon}, {q0, q0 + slope * horizon}, 0.0, 0.0};
}

PredictedQueue predict_zero(EdgeId e, double prediction_time, const QueueHistory& /*history*/) {
  return {e, prediction_time, PiecewiseLinearFn::constant(0.0, prediction_time)};
}

PredictedQueue predict_constant(EdgeId e, double prediction_time, const QueueHistory& history) {
  return {e, prediction_time, PiecewiseLinearFn::constant(std::max(0.0, history.at(e, prediction_time)), prediction_time)};
}

PredictedQueue predict_linear(EdgeId e, double prediction_time, const QueueHistory& history, double horizon) {
  const double q0 = history.at(e, prediction_time);
  const double slope = prediction_time <= 0.0 ? 0.0 : history.queues[e].slope_left_of(prediction_time);
  return {e, prediction_time, clamped_ramp(prediction_time, q0, slope, horizon)};
}

PredictedQueue predict_reg_linear(EdgeId e, double prediction_time, const QueueHistory& history, double delta,
                                  double horizon) {
  if (!(delta > 0.0)) throw PreconditionError("regularized linear predictor: delta must be positive");
  const double q0 = history.at(e, prediction_time);
  const double past = history.at(e, prediction_time - delta);
  return {e, prediction_time, clamped_ramp(prediction_time, q0, (q0 - past) / delta, horizon)};
}

PredictedQueue predict_threshold(EdgeId e, double prediction_time, const QueueHistory& history, double threshold,
                                 double value) {
  const double q0 = history.at(e, prediction_time);
  return {e, prediction_time, PiecewiseLinearFn::constant(q0 < threshold ? std::max(q0, 0.0) : value, prediction_time)};
}

PredictedQueue predict_regression(const RegressionModel& model, const Network& network, EdgeId e,
                                  double prediction_time, const QueueHistory& history, std::size_t* fifo_fixes) {
  const auto& block = model.block_for(e);
  if (block.size() != model.block_size()) throw PreconditionError("regression model: coefficient block size mismatch");
  const auto nbhd = neighborhood(network, e, model.slots);
  const std::size_t k = static_cast<std::size_t>(model.sample_count);
  std::vector<double> x(model.features(), 0.0);
  for (std::size_t i = 1; i <= k; ++i) {
    for (std::size_t s = 0; s < model.slots; ++s) {
      if (nbhd[s] == kNoEdge) continue;
      x[(i - 1) * model.slots + s] = history.at(nbhd[s], prediction_time - static_cast<double>(i) * model.sample_step);
    }
  }
  const double nu = network.edge(e).capacity;
  const double step = model.sample_step;
  std::vector<double> ts{prediction_time};
  std::vector<double> vs{std::max(0.0, history.at(e, prediction_time))};
  for (int j = 1; j <= model.future_steps; ++j) {
    const double* a = block.data() + static_cast<std::size_t>(j - 1) * model.features();
    double p = 0.0;
    for (std::size_t f = 0; f < x.size(); ++f) p += a[f] * x[f];
    p = std::max(p, 0.0);
    // Keep theta + q^(theta)/nu non-decreasing: the queue may fall at most at rate nu.
    const double floor = vs.back() - nu * step;
    if (p < floor) {
      p = floor;
      if (fifo_fixes != nullptr) ++*fifo_fixes;
    }
    ts.push_back(prediction_time + j * step);
    vs.push_back(p);
  }
  return {e, prediction_time, prune(PiecewiseLinearFn(std::move(ts), std::move(vs), 0.0, 0.0))};
}

PredictedQueue predict_perfect(EdgeId e, double prediction_time, const PiecewiseLinearFn& full_queue,
                               EvaluationMode mode) {
  if (mode == EvaluationMode::kLive) {
    throw PreconditionError("perfect predictor is not oblivious and cannot be used inside the equilibrium loop");
  }
  PiecewiseLinearFn f = full_queue.restrict_from(prediction_time);
  return {e, prediction_time, PiecewiseLinearFn(f.times(), f.values(), 0.0, f.slope_after())};
}

// ---------------------------------------------------------------------------

std::vector<PredictedQueue> Predictor::predict_all(const Network& network, double prediction_time,
                                                   const QueueHistory& history) const {
  std::vector<PredictedQueue> out;
  out.reserve(network.edge_count());
  for (EdgeId e = 0; e < network.edge_count(); ++e) out.push_back(predict(network, e, prediction_time, history));
  return out;
}

PredictedQueue PerfectPredictor::predict(const Network& /*network*/, EdgeId e, double prediction_time,
                                         const QueueHistory& /*history*/) const {
  return predict_perfect(e, prediction_time, full_.at(e), mode_);
}

namespace {

class ZeroPredictor final : public Predictor {
 public:
  PredictorKind kind() const override { return PredictorKind::kZero; }
  PredictedQueue predict(const Network&, EdgeId e, double t, const QueueHistory& h) const override {
    return predict_zero(e, t, h);
  }
};

class ConstantPredictor final : public Predictor {
 public:
  PredictorKind kind() const override { return PredictorKind::kConstant; }
  PredictedQueue predict(const Network&, EdgeId e, double t, const QueueHistory& h) const override {
    return predict_constant(e, t, h);
  }
};

class LinearPredictor final : public Predictor {
 public:
  explicit LinearPredictor(double horizon) : horizon_(horizon) {}
  PredictorKind kind() const override { return PredictorKind::kLinear; }
  PredictedQueue predict(const Network&, EdgeId e, double t, const QueueHistory& h) const override {
    return predict_linear(e, t, h, horizon_);
  }

 private:
  double horizon_;
};

class RegularizedLinearPredictor final : public Predictor {
 public:
  RegularizedLinearPredictor(double delta, double horizon) : delta_(delta), horizon_(horizon) {}
  PredictorKind kind() const override { return PredictorKind::kRegularizedLinear; }
  PredictedQueue predict(const Network&, EdgeId e, double t, const QueueHistory& h) const override {
    return predict_reg_linear(e, t, h, delta_, horizon_);
  }

 private:
  double delta_;
  double horizon_;
};

class ThresholdPredictor final : public Predictor {
 public:
  ThresholdPredictor(double threshold, double value) : threshold_(threshold), value_(value) {}
  PredictorKind kind() const override { return PredictorKind::kThreshold; }
  PredictedQueue predict(const Network&, EdgeId e, double t, const QueueHistory& h) const override {
    return predict_threshold(e, t, h, threshold_, value_);
  }

 private:
  double threshold_;
  double value_;
};

class RegressionPredictor final : public Predictor {
 public:
  explicit RegressionPredictor(std::shared_ptr<const RegressionModel> model) : model_(std::move(model)) {}
  PredictorKind kind() const override { return PredictorKind::kRegression; }
  PredictedQueue predict(const Network& n, EdgeId e, double t, const QueueHistory& h) const override {
    return predict_regression(*model_, n, e, t, h);
  }

 private:
  std::shared_ptr<const RegressionModel> model_;
};

}  // namespace

std::unique_ptr<Predictor> make_predictor(PredictorKind kind, const PredictorParams& params,
                                          std::shared_ptr<const RegressionModel> model) {
  switch (kind) {
    case PredictorKind::kZero: return std::make_unique<ZeroPredictor>();
    case PredictorKind::kConstant: return std::make_unique<ConstantPredictor>();
    case PredictorKind::kLinear: return std::make_unique<LinearPredictor>(params.prediction_horizon);
    case PredictorKind::kRegularizedLinear:
      return std::make_unique<RegularizedLinearPredictor>(params.rolling_horizon, params.prediction_horizon);
    case PredictorKind::kThreshold: return std::make_unique<ThresholdPredictor>(params.threshold, params.threshold_value);
    case PredictorKind::kRegression:
      if (!model) throw PreconditionError("regression predictor requires a trained model");
      return std::make_unique<RegressionPredictor>(std::move(model));
    case PredictorKind::kPerfect:
      throw PreconditionError("perfect predictor is not oblivious and cannot be used inside the equilibrium loop");
  }
  throw PreconditionError("unknown predictor kind");
}

}  // namespace dpe
