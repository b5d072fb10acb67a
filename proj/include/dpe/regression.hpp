#pragma once

// Linear regression predictor: the predicted queue of edge e at theta_bar + j*step is
//   ( sum_{e' in N(e)} sum_{i=1..k} a[j][i][e'] * q_{e'}(theta_bar - i*step) )^+
// where N(e) is e itself followed by up to (slots - 1) incoming edges of
// e's tail, zero-padded.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpe/network.hpp"
#include "dpe/pwl.hpp"

namespace dpe {

inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();

// Slot 0 is e; the rest are incoming edges of tail(e) in id order, padded with kNoEdge.
[[nodiscard]] std::vector<EdgeId> neighborhood(const Network& network, EdgeId e, std::size_t slots);

struct RegressionModel {
  int sample_count = 10;  // k
  double sample_step = 1.0;
  int future_steps = 20;  // points predicted after theta_bar
  std::size_t slots = 6;  // |N(e)| including padding
  bool per_edge = false;
  std::size_t edge_count = 0;  // required network size when per_edge
  // One coefficient block per model (1 shared, or one per edge), laid out [j][i][slot].
  std::vector<std::vector<double>> coefficients;

  // Training metadata carried in the model file.
  std::uint64_t seed = 0;
  std::vector<std::optional<double>> edge_r2;
  std::optional<double> overall_r2;
  bool ridge_fallback = false;

  [[nodiscard]] std::size_t features() const { return static_cast<std::size_t>(sample_count) * slots; }
  [[nodiscard]] std::size_t block_size() const { return static_cast<std::size_t>(future_steps) * features(); }
  [[nodiscard]] const std::vector<double>& block_for(EdgeId e) const {
    return per_edge ? coefficients.at(e) : coefficients.at(0);
  }
  [[nodiscard]] double coefficient(EdgeId e, int j, int i, std::size_t slot) const {
    return block_for(e)[(static_cast<std::size_t>(j - 1) * sample_count + static_cast<std::size_t>(i - 1)) * slots +
                        slot];
  }
  // Throws PreconditionError on inconsistent dimensions or non-finite coefficients.
  void check(const Network& network) const;
};

// One solved least-squares problem: per future step j, labels y_j = X a_j.
struct RegressionSamples {
  std::vector<std::vector<double>> features;  // rows of length k * slots
  std::vector<std::vector<double>> labels;    // rows of length future_steps
};

struct FitResult {
  std::vector<double> coefficients;  // [j][feature]
  bool ridge_fallback = false;       // feature matrix was rank deficient
};

// Least squares per label column on column-scaled features; a rank-deficient
// matrix is solved from the scaled normal equations with ridge added.
[[nodiscard]] FitResult fit_least_squares(const RegressionSamples& samples, std::size_t feature_count,
                                          std::size_t label_count, double ridge = 1e-8);

// Coefficient of determination over all labels; nullopt when the labels have no variance.
[[nodiscard]] std::optional<double> r_squared(const RegressionSamples& samples, std::span<const double> coefficients,
                                              std::size_t label_count);

// Queue functions recorded by one simulation, valid on [0, horizon].
struct QueueTrace {
  std::vector<PiecewiseLinearFn> queues;
  double horizon = 0.0;
};

struct TrainingOptions {
  int sample_count = 10;
  double sample_step = 1.0;
  int future_steps = 20;
  std::size_t slots = 6;
  bool per_edge = true;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;
  double ridge = 1e-8;
  // Earliest prediction time sampled; earlier history reads as q(0).
  double min_prediction_time = 0.0;
};

struct TrainingReport {
  std::vector<std::optional<double>> edge_r2;  // held-out R^2 per edge, nullopt if degenerate
  std::optional<double> overall_r2;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  bool ridge_fallback = false;
};

// Samples (features, labels) of edge e from one trace at prediction times
// min_prediction_time, +step, ... while theta_bar + future_steps * step <= horizon.
[[nodiscard]] RegressionSamples extract_samples(const Network& network, const QueueTrace& trace, EdgeId e,
                                                const TrainingOptions& options);

[[nodiscard]] RegressionModel train_regression(const Network& network, std::span<const QueueTrace> traces,
                                               const TrainingOptions& options, TrainingReport* report = nullptr);

inline constexpr std::string_view kModelFormat = "dpe-model/1";

[[nodiscard]] std::string dump_model(const RegressionModel& model);
[[nodiscard]] RegressionModel parse_model(std::string_view text);
void save_model(const RegressionModel& model, const std::filesystem::path& path);
[[nodiscard]] RegressionModel load_model(const std::filesystem::path& path);

}  // namespace dpe
