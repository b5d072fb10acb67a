#pragma once

// Predicted earliest-arrival labels l_v(theta) towards a sink and the active
// edges they induce. Labels are exact piecewise-linear functions on
// [prediction_time, inf).

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dpe/network.hpp"
#include "dpe/predictors.hpp"
#include "dpe/pwl.hpp"

namespace dpe {

// T^_e(theta) = theta + tau_e + q^_e(theta) / nu_e, one per edge.
[[nodiscard]] std::vector<PiecewiseLinearFn> predicted_exit_times(const Network& network,
                                                                  std::span<const PredictedQueue> predictions);

struct LabelSet {
  NodeId sink = 0;
  double prediction_time = 0.0;
  std::vector<std::optional<PiecewiseLinearFn>> labels;  // nullopt: sink unreachable
  std::shared_ptr<const std::vector<PiecewiseLinearFn>> exit_times;
  std::size_t relaxations = 0;

  [[nodiscard]] bool reachable(NodeId v) const { return labels[v].has_value(); }
};

// Label-correcting search from the sink. Throws PreconditionError if an exit
// time function decreases and SimulationError if the search fails to settle.
[[nodiscard]] LabelSet compute_labels(const Network& network, NodeId sink, double prediction_time,
                                      std::shared_ptr<const std::vector<PiecewiseLinearFn>> exit_times,
                                      double prune_epsilon = 0.0);
[[nodiscard]] LabelSet compute_labels(const Network& network, NodeId sink, double prediction_time,
                                      std::span<const PredictedQueue> predictions, double prune_epsilon = 0.0);

// Outgoing edges vw of v with l_w(T^_vw(theta)) <= l_v(theta) + tolerance, in edge id order.
[[nodiscard]] std::vector<EdgeId> active_edges(const Network& network, const LabelSet& labels, NodeId v, double theta,
                                               double tolerance = 1e-9);

}  // namespace dpe
