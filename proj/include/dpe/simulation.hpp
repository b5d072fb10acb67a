#pragma once

// The extension-based equilibrium loop: at every prediction time
// theta_bar_k = k * eps all queues are predicted, labels and active edges
// recomputed, and node inflows are split equally over the active edges in
// distribution phases until the next prediction time.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpe/flow_state.hpp"
#include "dpe/network.hpp"
#include "dpe/predictors.hpp"
#include "dpe/regression.hpp"

namespace dpe {

struct Event {
  enum class Kind : std::uint8_t { kPrediction, kActive, kInactive, kOutflow, kDepletion };
  double time = 0.0;
  Kind kind = Kind::kPrediction;
  std::optional<EdgeId> edge;
  std::optional<CommodityId> commodity;
  std::string detail;

  friend bool operator==(const Event&, const Event&) = default;
};

[[nodiscard]] std::string_view to_string(Event::Kind kind);

struct CommodityMetrics {
  CommodityId commodity = 0;
  std::string id;
  PredictorKind predictor = PredictorKind::kConstant;
  double total_travel_time = 0.0;
  double average_travel_time = 0.0;  // total / inflow mass; 0 without inflow
  double inflow_mass = 0.0;          // integral of u_i over [0, H]
  double outflow_mass = 0.0;         // mass absorbed at the sink by H

  friend bool operator==(const CommodityMetrics&, const CommodityMetrics&) = default;
};

struct RunOptions {
  // Required by commodities using the regression predictor.
  std::shared_ptr<const RegressionModel> model;
  bool record_events = true;
  // Keep the active sets of every prediction time (for audit_equilibrium).
  bool record_active_sets = false;
  // Keep l_v(theta_bar) of every commodity at every prediction time (for audit_ide).
  bool record_label_values = false;
};

// Active edges of commodity i at node v, fixed for one prediction interval.
using ActiveSets = std::vector<std::vector<std::vector<EdgeId>>>;  // [commodity][node]

struct SimulationResult {
  std::shared_ptr<const Network> network;
  std::vector<Commodity> commodities;
  SimulationParams params;
  FlowOverTime flow;
  std::vector<CommodityMetrics> metrics;
  std::vector<Event> events;
  std::vector<double> prediction_times;
  std::vector<ActiveSets> active_history;                          // per prediction time
  std::vector<std::vector<std::vector<double>>> label_values;      // [k][commodity][node], inf if unreachable
  std::size_t phases = 0;
  std::size_t regression_fifo_fixes = 0;
  std::size_t label_relaxations = 0;
};

// Loads the regression model named by the scenario, if any commodity needs it.
[[nodiscard]] std::shared_ptr<const RegressionModel> load_scenario_model(const Scenario& scenario);

// Throws ValidationError for an invalid scenario and SimulationError for
// stranded flow or label non-convergence.
[[nodiscard]] SimulationResult run(const Scenario& scenario, const RunOptions& options = {});

// Equal split of the node inflow `rate` over `active`; returns one rate per
// entry of `active`. Throws SimulationError if rate > 0 and active is empty.
[[nodiscard]] std::vector<double> distribution_phase(double rate, const std::vector<EdgeId>& active);

// Travel time metrics over [0, H]. Throws ValidationError if H < h.
[[nodiscard]] std::vector<CommodityMetrics> compute_metrics(const FlowOverTime& flow,
                                                            const std::vector<Commodity>& commodities,
                                                            const SimulationParams& params);

// Mass of commodity i on edges at time t (entered but not yet left).
[[nodiscard]] double mass_in_transit(const FlowOverTime& flow, CommodityId i, double t);

// Scales every commodity so that the total inflow rate at time 0 equals `total`.
// Throws ValidationError if the scenario has no inflow at time 0.
[[nodiscard]] Scenario with_total_inflow(const Scenario& base, double total);

struct SweepRow {
  double total_inflow = 0.0;
  CommodityMetrics metrics;
};

// Runs `base` at total inflows max_inflow * (p + 0.5) / points, p = 0..points-1.
[[nodiscard]] std::vector<SweepRow> sweep_total_inflow(const Scenario& base, int points, double max_inflow,
                                                       const RunOptions& options = {});

struct TraceGeneration {
  int runs = 20;
  // Without random commodities the scenario's commodities are scaled to a
  // total inflow drawn uniformly from [min_inflow, max_inflow].
  double min_inflow = 0.5;
  double max_inflow = 30.0;
  std::size_t random_commodities = 0;
  double capacity_factor = 0.2;
  std::uint64_t seed = 1;
};

// Queue traces of constant-predictor runs for regression training.
[[nodiscard]] std::vector<QueueTrace> generate_training_traces(const Scenario& base, const TraceGeneration& options);

// ---------------------------------------------------------------------------
// Audits

struct EquilibriumAudit {
  std::size_t checked_pieces = 0;
  std::size_t violations = 0;  // positive inflow pieces on an edge outside the governing active set
};

// Every positive per-commodity inflow piece must lie on an edge active at the
// governing prediction time. Requires record_active_sets.
[[nodiscard]] EquilibriumAudit audit_equilibrium(const SimulationResult& result);

struct IdeAudit {
  std::size_t checked = 0;
  double max_label_gap = 0.0;    // |l_v(theta_bar) - instantaneous shortest path label|
  std::size_t active_mismatches = 0;
};

// For constant-predictor commodities: recomputes instantaneous labels
// theta_bar + dist_v with edge costs tau_e + q_e(theta_bar) / nu_e (Dijkstra)
// and compares with the recorded labels and active sets. Requires
// record_label_values and record_active_sets.
[[nodiscard]] IdeAudit audit_ide(const SimulationResult& result, double tolerance = 1e-9);

// ---------------------------------------------------------------------------
// Output formats

[[nodiscard]] std::string format_events(const std::vector<Event>& events, const Network& network,
                                        const std::vector<Commodity>& commodities);
[[nodiscard]] std::string metrics_csv(const std::vector<CommodityMetrics>& metrics);
[[nodiscard]] std::string metrics_json(const std::vector<CommodityMetrics>& metrics);

inline constexpr std::string_view kFlowFormat = "dpe-flow/1";

struct FlowDump {
  struct EdgeFlows {
    std::string id;
    PiecewiseLinearFn queue;
    std::vector<RightConstantFn> inflow;   // per commodity
    std::vector<RightConstantFn> outflow;  // per commodity
  };
  double horizon = 0.0;
  std::vector<std::string> commodities;
  std::vector<EdgeFlows> edges;
};

[[nodiscard]] std::string dump_flow(const SimulationResult& result);
[[nodiscard]] FlowDump parse_flow_dump(std::string_view text);

// ---------------------------------------------------------------------------
// Non-continuous predictor demo

// Two parallel edges s->t: e1 (tau 1, nu 1) and e2 (tau 2, nu 2), inflow 2,
// threshold predictor.
[[nodiscard]] Scenario counterexample_scenario(double prediction_step = 0.25, double horizon = 20.0);

struct CounterexampleReport {
  SimulationResult result;
  double e1_queue_at_1 = 0.0;
  double e2_inflow_before_1 = 0.0;  // mass entering e2 on [0, 1)
  std::size_t flips = 0;            // prediction times after 1 whose active set differs from the previous one
  std::size_t prediction_steps_after_1 = 0;
};

[[nodiscard]] CounterexampleReport run_counterexample_demo(double prediction_step = 0.25, double horizon = 20.0);

}  // namespace dpe
