#include "dpe/routing.hpp"

#include <deque>
#include <string>

#include "dpe/errors.hpp"

namespace dpe {

std::vector<PiecewiseLinearFn> predicted_exit_times(const Network& network,
                                                    std::span<const PredictedQueue> predictions) {
  if (predictions.size() != network.edge_count()) {
    throw PreconditionError("predicted_exit_times: one prediction per edge expected");
  }
  std::vector<PiecewiseLinearFn> out;
  out.reserve(predictions.size());
  for (EdgeId e = 0; e < network.edge_count(); ++e) {
    const auto& edge = network.edge(e);
    out.push_back(predictions[e].function.scaled(1.0 / edge.capacity, edge.transit_time).plus_identity());
  }
  return out;
}

LabelSet compute_labels(const Network& network, NodeId sink, double prediction_time,
                        std::shared_ptr<const std::vector<PiecewiseLinearFn>> exit_times, double prune_epsilon) {
  if (!exit_times || exit_times->size() != network.edge_count()) {
    throw PreconditionError("compute_labels: one exit time function per edge expected");
  }
  for (EdgeId e = 0; e < network.edge_count(); ++e) {
    if (!(*exit_times)[e].restrict_from(prediction_time).is_non_decreasing()) {
      throw PreconditionError("compute_labels: predicted exit time of edge '" + network.edge(e).id +
                              "' decreases (predicted queue falls faster than capacity)");
    }
  }
  const std::size_t n = network.node_count();
  LabelSet out;
  out.sink = sink;
  out.prediction_time = prediction_time;
  out.labels.assign(n, std::nullopt);
  out.labels[sink] = PiecewiseLinearFn::identity(prediction_time);

  // FIFO label correction in rounds; without negative cycles (all transit
  // times are positive) labels settle within |V| rounds.
  std::deque<std::pair<NodeId, std::size_t>> queue{{sink, 0}};
  std::vector<bool> queued(n, false);
  queued[sink] = true;
  while (!queue.empty()) {
    const auto [w, round] = queue.front();
    queue.pop_front();
    queued[w] = false;
    if (round > n) {
      throw SimulationError("label computation towards '" + network.node_name(sink) + "' at time " +
                            std::to_string(prediction_time) + " did not settle within " + std::to_string(n) +
                            " rounds");
    }
    const PiecewiseLinearFn lw = *out.labels[w];
    for (EdgeId e : network.incoming(w)) {
      const NodeId v = network.edge(e).tail;
      if (v == sink) continue;
      ++out.relaxations;
      PiecewiseLinearFn cand = compose_monotone(lw, (*exit_times)[e]).restrict_from(prediction_time);
      auto& lv = out.labels[v];
      bool improved = false;
      if (!lv) {
        lv = prune(cand, prune_epsilon);
        improved = true;
      } else if (dips_below(cand, *lv, prediction_time)) {
        lv = prune(pointwise_min(*lv, cand).restrict_from(prediction_time), prune_epsilon);
        improved = true;
      }
      if (improved && !queued[v]) {
        queued[v] = true;
        queue.emplace_back(v, round + 1);
      }
    }
  }
  out.exit_times = std::move(exit_times);
  return out;
}

LabelSet compute_labels(const Network& network, NodeId sink, double prediction_time,
                        std::span<const PredictedQueue> predictions, double prune_epsilon) {
  auto exits = std::make_shared<const std::vector<PiecewiseLinearFn>>(predicted_exit_times(network, predictions));
  return compute_labels(network, sink, prediction_time, std::move(exits), prune_epsilon);
}

std::vector<EdgeId> active_edges(const Network& network, const LabelSet& labels, NodeId v, double theta,
                                 double tolerance) {
  std::vector<EdgeId> out;
  if (v == labels.sink || !labels.labels[v]) return out;
  const double lv = labels.labels[v]->eval(theta);
  for (EdgeId e : network.outgoing(v)) {
    const auto& lw = labels.labels[network.edge(e).head];
    if (!lw) continue;
    if (lw->eval((*labels.exit_times)[e].eval(theta)) <= lv + tolerance) out.push_back(e);
  }
  return out;
}

}  // namespace dpe
