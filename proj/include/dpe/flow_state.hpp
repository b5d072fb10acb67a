#pragma once

// The evolving flow over time. Edge inflows are extended in time order; the
// point-queue dynamics turn them into queues and per-commodity outflows as
// they are assigned, so outflows are always known up to the current exit
// horizon T_e(built_until) = built_until + tau_e + q_e(built_until) / nu_e.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpe/network.hpp"
#include "dpe/pwl.hpp"

namespace dpe {

struct OutflowEvent {
  enum class Kind : std::uint8_t { kOutflowChange, kQueueDepletion };
  double time = 0.0;
  EdgeId edge = 0;
  Kind kind = Kind::kOutflowChange;

  friend bool operator==(const OutflowEvent&, const OutflowEvent&) = default;
};

class FlowOverTime {
 public:
  FlowOverTime(const Network& network, std::size_t commodity_count);

  // Extends edge e on [start, end) with constant per-commodity inflow rates
  // (one entry per commodity). A gap between built_until(e) and `start` is
  // filled with zero inflow.
  void assign_inflow(EdgeId e, std::span<const double> rates, double start, double end);
  // Single-commodity convenience: commodity i at `rate`, all others zero.
  void assign_inflow(CommodityId i, EdgeId e, double rate, double start, double end);

  [[nodiscard]] const RightConstantFn& inflow(CommodityId i, EdgeId e) const { return edges_[e].inflow[i]; }
  [[nodiscard]] const RightConstantFn& outflow(CommodityId i, EdgeId e) const { return edges_[e].outflow[i]; }
  [[nodiscard]] const RightConstantFn& total_inflow(EdgeId e) const { return edges_[e].total_inflow; }
  [[nodiscard]] const RightConstantFn& total_outflow(EdgeId e) const { return edges_[e].total_outflow; }
  [[nodiscard]] const PiecewiseLinearFn& queue(EdgeId e) const { return queues_[e]; }
  [[nodiscard]] const std::vector<PiecewiseLinearFn>& queues() const { return queues_; }

  [[nodiscard]] double built_until(EdgeId e) const { return edges_[e].built_until; }
  // Outflows of e are final on [0, outflow_known_until(e)).
  [[nodiscard]] double outflow_known_until(EdgeId e) const { return edges_[e].exit_horizon; }
  [[nodiscard]] double current_queue(EdgeId e) const { return edges_[e].queue_now; }

  // Per-commodity outflow of e restricted to [0, up_to]. Throws
  // PreconditionError if up_to lies beyond the known outflow horizon.
  [[nodiscard]] std::vector<RightConstantFn> compute_outflow(EdgeId e, double up_to) const;

  // Earliest change of any edge's aggregated outflow rate (or queue
  // depletion) strictly after `after`, ties broken by edge id.
  [[nodiscard]] std::optional<OutflowEvent> next_outflow_event(double after) const;
  // Earliest time > after at which some per-commodity outflow rate of e
  // changes, capped at the known outflow horizon of e.
  [[nodiscard]] double next_outflow_change(EdgeId e, double after) const;

  [[nodiscard]] const std::vector<double>& depletion_times(EdgeId e) const { return edges_[e].depletions; }

  [[nodiscard]] std::size_t commodity_count() const { return commodity_count_; }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
  [[nodiscard]] const Network& network() const { return *network_; }

 private:
  struct EdgeState {
    std::vector<RightConstantFn> inflow;
    std::vector<RightConstantFn> outflow;
    RightConstantFn total_inflow;
    RightConstantFn total_outflow;
    std::vector<double> outflow_changes;  // any per-commodity outflow breakpoint, sorted
    std::vector<double> depletions;
    double built_until = 0.0;
    double queue_now = 0.0;
    double exit_horizon = 0.0;
  };

  void extend_piece(EdgeId e, std::span<const double> rates, double total, double start, double end);
  void append_outflow(EdgeId e, std::span<const double> rates, double total, double out_rate, double to);

  const Network* network_;
  std::size_t commodity_count_;
  std::vector<EdgeState> edges_;
  // Kept contiguous so predictors can take all queues as one span.
  std::vector<PiecewiseLinearFn> queues_;
};

// Post-hoc checks of the flow model invariants on [0, until], evaluated on the
// breakpoint grid (plus midpoints). Each field is the largest violation found.
struct FlowAudit {
  double queue_identity = 0.0;   // |q_e(t) - (F+_e(t) - F-_e(t + tau_e))| / max(1, F+_e(t))
  double negative_queue = 0.0;   // max(0, -q_e(t))
  double capacity_excess = 0.0;  // max(0, f-_e(t) - nu_e) / nu_e
  double fifo_identity = 0.0;    // |F+_e(t) - F-_e(T_e(t))| / max(1, F+_e(t))
  double commodity_split = 0.0;  // |sum_i f-_{i,e}(t) - f-_e(t)|
};

[[nodiscard]] FlowAudit audit_flow(const FlowOverTime& flow, double until);

}  // namespace dpe
