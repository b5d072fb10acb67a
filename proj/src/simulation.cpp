#include "dpe/simulation.hpp"

#include <algorithm>
#include <random>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <queue>
#include <sstream>

#include "dpe/errors.hpp"
#include "dpe/routing.hpp"

namespace dpe {

using nlohmann::json;

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_regression(PredictorKind k) { return k == PredictorKind::kRegression; }

}  // namespace

std::string_view to_string(Event::Kind kind) {
  switch (kind) {
    case Event::Kind::kPrediction: return "prediction";
    case Event::Kind::kActive: return "active";
    case Event::Kind::kInactive: return "inactive";
    case Event::Kind::kOutflow: return "outflow";
    case Event::Kind::kDepletion: return "depletion";
  }
  return "unknown";
}

std::shared_ptr<const RegressionModel> load_scenario_model(const Scenario& scenario) {
  const bool needed = std::any_of(scenario.commodities.begin(), scenario.commodities.end(),
                                  [](const Commodity& c) { return is_regression(c.predictor); });
  if (!needed) return nullptr;
  if (scenario.predictors.regression_model.empty()) {
    throw ValidationError("regression predictor used but no regression_model file configured");
  }
  std::filesystem::path p = scenario.predictors.regression_model;
  if (p.is_relative()) p = scenario.base_dir / p;
  auto model = std::make_shared<RegressionModel>(load_model(p));
  try {
    model->check(scenario.network);
  } catch (const PreconditionError& ex) {
    throw ValidationError(std::string("regression model '") + p.string() + "' does not fit the network: " + ex.what());
  }
  return model;
}

std::vector<double> distribution_phase(double rate, const std::vector<EdgeId>& active) {
  if (rate < 0.0) throw PreconditionError("distribution_phase: negative node inflow");
  if (rate > 0.0 && active.empty()) throw SimulationError("distribution_phase: positive inflow but no active edge");
  if (active.empty()) return {};
  return std::vector<double>(active.size(), rate / static_cast<double>(active.size()));
}

// ---------------------------------------------------------------------------

namespace {

struct Group {
  NodeId sink;
  PredictorKind kind;
};

class Runner {
 public:
  Runner(const Scenario& scenario, const RunOptions& options)
      : net_(std::make_shared<const Network>(scenario.network)), scenario_(scenario), options_(options),
        flow_(*net_, scenario.commodities.size()) {}

  SimulationResult execute();

 private:
  void predict_and_route(std::size_t k, double tbar);
  void distribute(double from, double to);
  void record_flow_events(SimulationResult& result) const;

  std::shared_ptr<const Network> net_;
  const Scenario& scenario_;
  const RunOptions& options_;
  FlowOverTime flow_;

  std::vector<Group> groups_;
  std::vector<std::size_t> group_of_;  // per commodity
  std::map<PredictorKind, std::unique_ptr<Predictor>> predictors_;
  std::vector<std::vector<std::vector<EdgeId>>> group_active_;  // [group][node]
  std::vector<std::vector<std::vector<EdgeId>>> previous_active_;

  std::vector<Event> events_;
  std::vector<double> prediction_times_;
  std::vector<ActiveSets> active_history_;
  std::vector<std::vector<std::vector<double>>> label_values_;
  std::size_t phases_ = 0;
  std::size_t fifo_fixes_ = 0;
  std::size_t relaxations_ = 0;
};

SimulationResult Runner::execute() {
  const auto& comms = scenario_.commodities;
  const auto& params = scenario_.simulation;
  for (CommodityId i = 0; i < comms.size(); ++i) {
    const auto kind = comms[i].predictor;
    if (!predictors_.contains(kind)) {
      if (kind == PredictorKind::kRegression && !options_.model) {
        throw ValidationError("commodity '" + comms[i].id + "' uses the regression predictor but no model is loaded");
      }
      predictors_[kind] = make_predictor(kind, scenario_.predictors, options_.model);
    }
    std::size_t g = 0;
    while (g < groups_.size() && !(groups_[g].sink == comms[i].sink && groups_[g].kind == kind)) ++g;
    if (g == groups_.size()) groups_.push_back({comms[i].sink, kind});
    group_of_.push_back(g);
  }
  group_active_.assign(groups_.size(), {});
  previous_active_.assign(comms.size(), std::vector<std::vector<EdgeId>>(net_->node_count()));

  const double eps = params.prediction_step;
  const double horizon = params.horizon;
  for (std::size_t k = 0;; ++k) {
    const double tbar = static_cast<double>(k) * eps;
    if (tbar >= horizon - kNumericTolerance) break;
    const double next = std::min(static_cast<double>(k + 1) * eps, horizon);
    predict_and_route(k, tbar);
    distribute(tbar, next);
  }

  SimulationResult result{net_, comms, params, std::move(flow_), {}, {}, {}, {}, {}, 0, 0, 0};
  result.metrics = compute_metrics(result.flow, comms, params);
  if (options_.record_events) {
    result.events = std::move(events_);
    record_flow_events(result);
    std::sort(result.events.begin(), result.events.end(), [](const Event& a, const Event& b) {
      constexpr auto none = std::numeric_limits<std::size_t>::max();
      return std::make_tuple(a.time, a.kind, a.edge.value_or(none), a.commodity.value_or(none)) <
             std::make_tuple(b.time, b.kind, b.edge.value_or(none), b.commodity.value_or(none));
    });
  }
  result.prediction_times = std::move(prediction_times_);
  result.active_history = std::move(active_history_);
  result.label_values = std::move(label_values_);
  result.phases = phases_;
  result.regression_fifo_fixes = fifo_fixes_;
  result.label_relaxations = relaxations_;
  return result;
}

void Runner::predict_and_route(std::size_t k, double tbar) {
  const auto& comms = scenario_.commodities;
  const QueueHistory history{flow_.queues(), tbar};
  prediction_times_.push_back(tbar);
  if (options_.record_events) events_.push_back({tbar, Event::Kind::kPrediction, std::nullopt, std::nullopt, ""});

  std::map<PredictorKind, std::shared_ptr<const std::vector<PiecewiseLinearFn>>> exits;
  for (const auto& [kind, predictor] : predictors_) {
    std::vector<PredictedQueue> predictions;
    if (kind == PredictorKind::kRegression) {
      predictions.reserve(net_->edge_count());
      for (EdgeId e = 0; e < net_->edge_count(); ++e) {
        predictions.push_back(predict_regression(*options_.model, *net_, e, tbar, history, &fifo_fixes_));
      }
    } else {
      predictions = predictor->predict_all(*net_, tbar, history);
    }
    exits[kind] = std::make_shared<const std::vector<PiecewiseLinearFn>>(predicted_exit_times(*net_, predictions));
  }

  std::vector<LabelSet> labels;
  labels.reserve(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    labels.push_back(
        compute_labels(*net_, groups_[g].sink, tbar, exits.at(groups_[g].kind), scenario_.simulation.prune_epsilon));
    relaxations_ += labels.back().relaxations;
    auto& sets = group_active_[g];
    sets.assign(net_->node_count(), {});
    for (NodeId v = 0; v < net_->node_count(); ++v) {
      sets[v] = active_edges(*net_, labels.back(), v, tbar, scenario_.simulation.active_tolerance);
    }
  }

  if (options_.record_events) {
    for (CommodityId i = 0; i < comms.size(); ++i) {
      // Commodities without any inflow make no routing decisions.
      if (comms[i].inflow.integrate(0.0, scenario_.simulation.horizon) <= 0.0) continue;
      const auto& now = group_active_[group_of_[i]];
      for (NodeId v = 0; v < net_->node_count(); ++v) {
        const auto& before = previous_active_[i][v];
        for (EdgeId e : now[v]) {
          if (!std::binary_search(before.begin(), before.end(), e)) {
            events_.push_back({tbar, Event::Kind::kActive, e, i, net_->node_name(v)});
          }
        }
        for (EdgeId e : before) {
          if (!std::binary_search(now[v].begin(), now[v].end(), e)) {
            events_.push_back({tbar, Event::Kind::kInactive, e, i, net_->node_name(v)});
          }
        }
        previous_active_[i][v] = now[v];
      }
    }
  }
  if (options_.record_active_sets) {
    ActiveSets sets(comms.size());
    for (CommodityId i = 0; i < comms.size(); ++i) sets[i] = group_active_[group_of_[i]];
    active_history_.push_back(std::move(sets));
  }
  if (options_.record_label_values) {
    std::vector<std::vector<double>> values(comms.size(), std::vector<double>(net_->node_count(), kInfinity));
    for (CommodityId i = 0; i < comms.size(); ++i) {
      const auto& ls = labels[group_of_[i]];
      for (NodeId v = 0; v < net_->node_count(); ++v) {
        if (ls.labels[v]) values[i][v] = ls.labels[v]->eval(tbar);
      }
    }
    label_values_.push_back(std::move(values));
  }
  (void)k;
}

void Runner::distribute(double from, double to) {
  const auto& comms = scenario_.commodities;
  const std::size_t n_comm = comms.size();
  const std::size_t n_nodes = net_->node_count();
  const std::size_t n_edges = net_->edge_count();
  std::vector<double> node_in(n_comm * n_nodes);
  std::vector<double> rates(n_edges * n_comm);

  double theta = from;
  while (theta < to - kNumericTolerance) {
    double end = to;
    for (const auto& c : comms) {
      if (auto t = c.inflow.next_breakpoint_after(theta)) end = std::min(end, *t);
    }
    for (EdgeId e = 0; e < n_edges; ++e) end = std::min(end, flow_.next_outflow_change(e, theta));

    std::fill(node_in.begin(), node_in.end(), 0.0);
    for (CommodityId i = 0; i < n_comm; ++i) node_in[i * n_nodes + comms[i].source] += comms[i].inflow.eval(theta);
    for (EdgeId e = 0; e < n_edges; ++e) {
      const NodeId head = net_->edge(e).head;
      for (CommodityId i = 0; i < n_comm; ++i) {
        const auto& out = flow_.outflow(i, e);
        if (out.empty()) continue;
        node_in[i * n_nodes + head] += out.eval(theta);
      }
    }

    std::fill(rates.begin(), rates.end(), 0.0);
    for (CommodityId i = 0; i < n_comm; ++i) {
      const auto& sets = group_active_[group_of_[i]];
      for (NodeId v = 0; v < n_nodes; ++v) {
        const double b = node_in[i * n_nodes + v];
        if (b <= 0.0 || v == comms[i].sink) continue;
        const auto& active = sets[v];
        if (active.empty()) {
          throw SimulationError("commodity '" + comms[i].id + "' has inflow " + format_number(b) + " at node '" +
                                net_->node_name(v) + "' at time " + format_number(theta) +
                                " but no active outgoing edge (sink unreachable)");
        }
        const auto split = distribution_phase(b, active);
        for (std::size_t a = 0; a < active.size(); ++a) rates[active[a] * n_comm + i] += split[a];
      }
    }
    for (EdgeId e = 0; e < n_edges; ++e) {
      flow_.assign_inflow(e, std::span<const double>(rates.data() + e * n_comm, n_comm), theta, end);
    }
    ++phases_;
    theta = end;
  }
}

void Runner::record_flow_events(SimulationResult& result) const {
  const double horizon = scenario_.simulation.horizon;
  const auto& flow = result.flow;
  for (EdgeId e = 0; e < net_->edge_count(); ++e) {
    const auto& out = flow.total_outflow(e);
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (out.times()[k] >= horizon) break;
      result.events.push_back({out.times()[k], Event::Kind::kOutflow, e, std::nullopt, format_number(out.values()[k])});
    }
    for (double t : flow.depletion_times(e)) {
      if (t >= horizon) break;
      result.events.push_back({t, Event::Kind::kDepletion, e, std::nullopt, ""});
    }
  }
}

}  // namespace

SimulationResult run(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  Runner runner(scenario, options);
  return runner.execute();
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<CommodityMetrics> compute_metrics(const FlowOverTime& flow, const std::vector<Commodity>& commodities,
                                              const SimulationParams& params) {
  const double horizon = params.horizon;
  if (horizon < params.inflow_cutoff) {
    throw ValidationError("horizon H must not be smaller than the inflow cutoff h");
  }
  const auto& net = flow.network();
  std::vector<CommodityMetrics> out;
  for (CommodityId i = 0; i < commodities.size(); ++i) {
    const auto& c = commodities[i];
    CommodityMetrics m;
    m.commodity = i;
    m.id = c.id;
    m.predictor = c.predictor;
    const PiecewiseLinearFn in_cum = c.inflow.cumulative();
    double absorbed_area = 0.0;
    double absorbed = 0.0;
    for (EdgeId e : net.incoming(c.sink)) {
      const PiecewiseLinearFn cum = flow.outflow(i, e).cumulative();
      absorbed_area += cum.integrate(0.0, horizon);
      absorbed += cum.eval(horizon);
    }
    for (EdgeId e : net.outgoing(c.sink)) {
      const PiecewiseLinearFn cum = flow.inflow(i, e).cumulative();
      absorbed_area -= cum.integrate(0.0, horizon);
      absorbed -= cum.eval(horizon);
    }
    m.inflow_mass = in_cum.eval(horizon);
    m.outflow_mass = absorbed;
    m.total_travel_time = in_cum.integrate(0.0, horizon) - absorbed_area;
    m.average_travel_time = m.inflow_mass > 0.0 ? m.total_travel_time / m.inflow_mass : 0.0;
    out.push_back(std::move(m));
  }
  return out;
}

double mass_in_transit(const FlowOverTime& flow, CommodityId i, double t) {
  double mass = 0.0;
  for (EdgeId e = 0; e < flow.edge_count(); ++e) {
    mass += flow.inflow(i, e).integrate(0.0, t) - flow.outflow(i, e).integrate(0.0, t);
  }
  return mass;
}

// ---------------------------------------------------------------------------
// Audits

EquilibriumAudit audit_equilibrium(const SimulationResult& result) {
  if (result.active_history.size() != result.prediction_times.size()) {
    throw PreconditionError("audit_equilibrium: run without record_active_sets");
  }
  EquilibriumAudit audit;
  const auto& net = *result.network;
  const auto& pts = result.prediction_times;
  const double horizon = result.params.horizon;
  for (EdgeId e = 0; e < net.edge_count(); ++e) {
    const NodeId tail = net.edge(e).tail;
    for (CommodityId i = 0; i < result.commodities.size(); ++i) {
      const auto& f = result.flow.inflow(i, e);
      for (std::size_t p = 0; p < f.size(); ++p) {
        if (f.values()[p] <= 0.0) continue;
        const double a = f.times()[p];
        const double b = p + 1 < f.size() ? f.times()[p + 1] : horizon;
        // Every prediction interval overlapping [a, b) governs part of this piece.
        auto it = std::upper_bound(pts.begin(), pts.end(), a + kNumericTolerance);
        std::size_t k = static_cast<std::size_t>(it - pts.begin()) - 1;
        for (; k < pts.size() && pts[k] < b - kNumericTolerance; ++k) {
          ++audit.checked_pieces;
          const auto& active = result.active_history[k][i][tail];
          if (std::find(active.begin(), active.end(), e) == active.end()) ++audit.violations;
        }
      }
    }
  }
  return audit;
}

IdeAudit audit_ide(const SimulationResult& result, double tolerance) {
  if (result.label_values.size() != result.prediction_times.size() ||
      result.active_history.size() != result.prediction_times.size()) {
    throw PreconditionError("audit_ide: run without record_label_values and record_active_sets");
  }
  IdeAudit audit;
  const auto& net = *result.network;
  const std::size_t n = net.node_count();
  for (std::size_t k = 0; k < result.prediction_times.size(); ++k) {
    const double tbar = result.prediction_times[k];
    std::vector<double> cost(net.edge_count());
    for (EdgeId e = 0; e < net.edge_count(); ++e) {
      cost[e] = net.edge(e).transit_time + result.flow.queue(e).eval(tbar) / net.edge(e).capacity;
    }
    std::map<NodeId, std::vector<double>> dist_by_sink;
    for (CommodityId i = 0; i < result.commodities.size(); ++i) {
      const auto& c = result.commodities[i];
      if (c.predictor != PredictorKind::kConstant) continue;
      auto [it, fresh] = dist_by_sink.try_emplace(c.sink);
      auto& dist = it->second;
      if (fresh) {
        dist.assign(n, kInfinity);
        using Item = std::pair<double, NodeId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[c.sink] = 0.0;
        pq.emplace(0.0, c.sink);
        while (!pq.empty()) {
          auto [d, w] = pq.top();
          pq.pop();
          if (d > dist[w]) continue;
          for (EdgeId e : net.incoming(w)) {
            const NodeId v = net.edge(e).tail;
            if (d + cost[e] < dist[v]) {
              dist[v] = d + cost[e];
              pq.emplace(dist[v], v);
            }
          }
        }
      }
      for (NodeId v = 0; v < n; ++v) {
        const double recorded = result.label_values[k][i][v];
        const bool reach = std::isfinite(dist[v]);
        ++audit.checked;
        if (reach != std::isfinite(recorded)) {
          audit.max_label_gap = kInfinity;
          continue;
        }
        if (!reach) continue;
        audit.max_label_gap = std::max(audit.max_label_gap, std::abs(recorded - (tbar + dist[v])));
        if (v == c.sink) continue;
        std::vector<EdgeId> expected;
        for (EdgeId e : net.outgoing(v)) {
          const NodeId w = net.edge(e).head;
          if (std::isfinite(dist[w]) && cost[e] + dist[w] <= dist[v] + tolerance) expected.push_back(e);
        }
        if (expected != result.active_history[k][i][v]) ++audit.active_mismatches;
      }
    }
  }
  return audit;
}

// ---------------------------------------------------------------------------
// Output formats

std::string format_events(const std::vector<Event>& events, const Network& network,
                          const std::vector<Commodity>& commodities) {
  std::ostringstream out;
  out << "time,kind,edge,commodity,detail\n";
  for (const auto& ev : events) {
    out << format_number(ev.time) << ',' << to_string(ev.kind) << ',';
    if (ev.edge) out << network.edge(*ev.edge).id;
    out << ',';
    if (ev.commodity) out << commodities[*ev.commodity].id;
    out << ',' << ev.detail << '\n';
  }
  return out.str();
}

std::string metrics_csv(const std::vector<CommodityMetrics>& metrics) {
  std::ostringstream out;
  out << "commodity,predictor,total_tt,avg_tt,inflow_mass,outflow_mass\n";
  for (const auto& m : metrics) {
    out << m.id << ',' << to_string(m.predictor) << ',' << format_number(m.total_travel_time) << ','
        << format_number(m.average_travel_time) << ',' << format_number(m.inflow_mass) << ','
        << format_number(m.outflow_mass) << '\n';
  }
  return out.str();
}

std::string metrics_json(const std::vector<CommodityMetrics>& metrics) {
  json rows = json::array();
  for (const auto& m : metrics) {
    rows.push_back({{"commodity", m.id},
                    {"predictor", to_string(m.predictor)},
                    {"total_tt", m.total_travel_time},
                    {"avg_tt", m.average_travel_time},
                    {"inflow_mass", m.inflow_mass},
                    {"outflow_mass", m.outflow_mass}});
  }
  return rows.dump(1);
}

namespace {

json points(const std::vector<double>& ts, const std::vector<double>& vs) {
  json arr = json::array();
  for (std::size_t k = 0; k < ts.size(); ++k) arr.push_back({ts[k], vs[k]});
  return arr;
}

void read_points(const json& arr, std::vector<double>& ts, std::vector<double>& vs) {
  for (const auto& p : arr) {
    ts.push_back(p.at(0).get<double>());
    vs.push_back(p.at(1).get<double>());
  }
}

}  // namespace

std::string dump_flow(const SimulationResult& result) {
  const auto& net = *result.network;
  json j;
  j["format"] = kFlowFormat;
  j["horizon"] = result.params.horizon;
  json comms = json::array();
  for (const auto& c : result.commodities) comms.push_back(c.id);
  j["commodities"] = comms;
  json edges = json::array();
  for (EdgeId e = 0; e < net.edge_count(); ++e) {
    const auto& q = result.flow.queue(e);
    json ej;
    ej["id"] = net.edge(e).id;
    ej["queue"] = points(q.times(), q.values());
    ej["queue_slope_after"] = q.slope_after();
    json in = json::array();
    json out = json::array();
    for (CommodityId i = 0; i < result.commodities.size(); ++i) {
      in.push_back(points(result.flow.inflow(i, e).times(), result.flow.inflow(i, e).values()));
      out.push_back(points(result.flow.outflow(i, e).times(), result.flow.outflow(i, e).values()));
    }
    ej["inflow"] = in;
    ej["outflow"] = out;
    edges.push_back(ej);
  }
  j["edges"] = edges;
  return j.dump(1);
}

FlowDump parse_flow_dump(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ParseError(std::string("flow dump: invalid JSON: ") + ex.what());
  }
  try {
    if (j.value("format", std::string{}) != kFlowFormat) {
      throw ParseError("flow dump: expected format '" + std::string(kFlowFormat) + "'");
    }
    FlowDump dump;
    dump.horizon = j.at("horizon").get<double>();
    dump.commodities = j.at("commodities").get<std::vector<std::string>>();
    for (const auto& ej : j.at("edges")) {
      FlowDump::EdgeFlows ef;
      ef.id = ej.at("id").get<std::string>();
      std::vector<double> ts;
      std::vector<double> vs;
      read_points(ej.at("queue"), ts, vs);
      ef.queue = PiecewiseLinearFn(std::move(ts), std::move(vs), 0.0, ej.value("queue_slope_after", 0.0));
      for (const char* key : {"inflow", "outflow"}) {
        auto& target = std::string_view(key) == "inflow" ? ef.inflow : ef.outflow;
        for (const auto& fn : ej.at(key)) {
          std::vector<double> ft;
          std::vector<double> fv;
          read_points(fn, ft, fv);
          target.emplace_back(std::move(ft), std::move(fv), 0.0);
        }
        if (target.size() != dump.commodities.size()) {
          throw ParseError("flow dump: edge '" + ef.id + "' " + key + " lists " + std::to_string(target.size()) +
                           " commodities, expected " + std::to_string(dump.commodities.size()));
        }
      }
      dump.edges.push_back(std::move(ef));
    }
    return dump;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("flow dump: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Non-continuous predictor demo

Scenario counterexample_scenario(double prediction_step, double horizon) {
  Scenario sc;
  const NodeId s = sc.network.add_node("s");
  const NodeId t = sc.network.add_node("t");
  sc.network.add_edge("e1", s, t, 1.0, 1.0);
  sc.network.add_edge("e2", s, t, 2.0, 2.0);
  sc.commodities.push_back({"c", s, t, block_inflow(2.0, horizon), PredictorKind::kThreshold});
  sc.simulation.prediction_step = prediction_step;
  sc.simulation.horizon = horizon;
  sc.simulation.inflow_cutoff = horizon;
  sc.predictors.threshold = 1.0;
  sc.predictors.threshold_value = 2.0;
  return sc;
}

CounterexampleReport run_counterexample_demo(double prediction_step, double horizon) {
  const Scenario sc = counterexample_scenario(prediction_step, horizon);
  RunOptions opts;
  opts.record_active_sets = true;
  CounterexampleReport rep{run(sc, opts)};
  const auto& res = rep.result;
  rep.e1_queue_at_1 = res.flow.queue(0).eval(1.0);
  rep.e2_inflow_before_1 = res.flow.inflow(0, 1).integrate(0.0, 1.0);
  const NodeId s = 0;
  for (std::size_t k = 1; k < res.prediction_times.size(); ++k) {
    if (res.prediction_times[k] < 1.0 - kNumericTolerance) continue;
    ++rep.prediction_steps_after_1;
    if (res.active_history[k][0][s] != res.active_history[k - 1][0][s]) ++rep.flips;
  }
  return rep;
}

Scenario with_total_inflow(const Scenario& base, double total) {
  Scenario sc = base;
  double base_total = 0.0;
  for (const auto& c : base.commodities) base_total += c.inflow.eval(0.0);
  if (base_total <= 0.0) throw ValidationError("scenario has no inflow at time 0 to scale");
  for (auto& c : sc.commodities) {
    std::vector<double> vs(c.inflow.values());
    for (double& v : vs) v *= total / base_total;
    c.inflow = RightConstantFn(c.inflow.times(), std::move(vs), c.inflow.domain_start());
  }
  return sc;
}

std::vector<SweepRow> sweep_total_inflow(const Scenario& base, int points, double max_inflow,
                                         const RunOptions& options) {
  if (points <= 0 || !(max_inflow > 0.0)) throw ValidationError("sweep needs points > 0 and max_inflow > 0");
  std::vector<SweepRow> rows;
  for (int p = 0; p < points; ++p) {
    const double total = max_inflow * (p + 0.5) / points;
    for (auto& m : run(with_total_inflow(base, total), options).metrics) rows.push_back({total, std::move(m)});
  }
  return rows;
}

std::vector<QueueTrace> generate_training_traces(const Scenario& base, const TraceGeneration& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> inflow_law(options.min_inflow, options.max_inflow);
  RunOptions run_opts;
  run_opts.record_events = false;
  std::vector<QueueTrace> traces;
  for (int r = 0; r < options.runs; ++r) {
    Scenario sc = base;
    if (options.random_commodities > 0) {
      CommodityGeneration gen;
      gen.count = options.random_commodities;
      gen.seed = rng();
      gen.capacity_factor = options.capacity_factor;
      gen.until = sc.simulation.inflow_cutoff;
      sc.commodities = generate_commodities(sc.network, gen);
    } else {
      sc = with_total_inflow(base, inflow_law(rng));
    }
    for (auto& c : sc.commodities) c.predictor = PredictorKind::kConstant;
    const auto result = run(sc, run_opts);
    traces.push_back({result.flow.queues(), sc.simulation.horizon});
  }
  return traces;
}

}  // namespace dpe
