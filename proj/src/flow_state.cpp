#include "dpe/flow_state.hpp"

#include <algorithm>
#include <cmath>

#include "dpe/errors.hpp"

namespace dpe {
namespace {

// Queues below this many seconds of waiting are treated as empty.
constexpr double kQueueWaitTolerance = 1e-12;

}  // namespace

FlowOverTime::FlowOverTime(const Network& network, std::size_t commodity_count)
    : network_(&network), commodity_count_(commodity_count), edges_(network.edge_count()),
      queues_(network.edge_count()) {
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    auto& st = edges_[e];
    st.inflow.assign(commodity_count, RightConstantFn(0.0));
    st.outflow.assign(commodity_count, RightConstantFn(0.0));
    st.exit_horizon = network.edge(e).transit_time;
  }
}

void FlowOverTime::assign_inflow(CommodityId i, EdgeId e, double rate, double start, double end) {
  std::vector<double> rates(commodity_count_, 0.0);
  rates.at(i) = rate;
  assign_inflow(e, rates, start, end);
}

void FlowOverTime::assign_inflow(EdgeId e, std::span<const double> rates, double start, double end) {
  if (rates.size() != commodity_count_) throw PreconditionError("assign_inflow: one rate per commodity expected");
  auto& st = edges_[e];
  if (start < st.built_until - kNumericTolerance) {
    throw PreconditionError("assign_inflow: interval starts at " + std::to_string(start) +
                            " before the built horizon " + std::to_string(st.built_until) + " of edge '" +
                            network_->edge(e).id + "'");
  }
  if (end < start) throw PreconditionError("assign_inflow: interval end before start");
  double total = 0.0;
  for (double r : rates) {
    if (r < 0.0 || !std::isfinite(r)) throw PreconditionError("assign_inflow: negative or non-finite rate");
    total += r;
  }
  if (start > st.built_until + kNumericTolerance) {
    const std::vector<double> zeros(commodity_count_, 0.0);
    extend_piece(e, zeros, 0.0, st.built_until, start);
  }
  if (end <= st.built_until + kNumericTolerance) return;
  extend_piece(e, rates, total, st.built_until, end);
}

void FlowOverTime::extend_piece(EdgeId e, std::span<const double> rates, double total, double a, double b) {
  auto& st = edges_[e];
  auto& q = queues_[e];
  const double nu = network_->edge(e).capacity;
  const double tau = network_->edge(e).transit_time;

  for (CommodityId i = 0; i < commodity_count_; ++i) st.inflow[i].append(a, rates[i]);
  st.total_inflow.append(a, total);

  const double q0 = st.queue_now <= kQueueWaitTolerance * nu ? 0.0 : st.queue_now;
  if (q0 > 0.0 || total > nu) {
    const double slope = total - nu;
    const double qb = q0 + slope * (b - a);
    if (slope < 0.0 && qb <= kQueueWaitTolerance * nu) {
      // The queue runs empty inside [a, b): at capacity until d, then free flow.
      const double d = std::min(b, a + q0 / (nu - total));
      append_outflow(e, rates, total, nu, d + tau);
      q.append(d, 0.0);
      st.depletions.push_back(d);
      append_outflow(e, rates, total, total, b + tau);
      q.append(b, 0.0);
      st.queue_now = 0.0;
    } else {
      append_outflow(e, rates, total, nu, b + tau + qb / nu);
      q.append(b, qb);
      st.queue_now = qb;
    }
  } else {
    append_outflow(e, rates, total, total, b + tau);
    q.append(b, 0.0);
    st.queue_now = 0.0;
  }
  st.built_until = b;
}

void FlowOverTime::append_outflow(EdgeId e, std::span<const double> rates, double total, double out_rate,
                                  double to) {
  auto& st = edges_[e];
  const double from = st.exit_horizon;
  if (to <= from + kNumericTolerance) {
    st.exit_horizon = std::max(from, to);
    return;
  }
  bool changed = false;
  for (CommodityId i = 0; i < commodity_count_; ++i) {
    const double r = total > 0.0 ? out_rate * (rates[i] / total) : 0.0;
    if (r != st.outflow[i].last_value()) {
      changed = true;
      st.outflow[i].append(from, r);
    }
  }
  st.total_outflow.append(from, total > 0.0 ? out_rate : 0.0);
  if (changed && (st.outflow_changes.empty() || st.outflow_changes.back() < from - kNumericTolerance)) {
    st.outflow_changes.push_back(from);
  }
  st.exit_horizon = to;
}

std::vector<RightConstantFn> FlowOverTime::compute_outflow(EdgeId e, double up_to) const {
  const auto& st = edges_[e];
  if (up_to > st.exit_horizon + kNumericTolerance) {
    throw PreconditionError("compute_outflow: outflow of edge '" + network_->edge(e).id + "' is only known up to " +
                            std::to_string(st.exit_horizon));
  }
  std::vector<RightConstantFn> out;
  out.reserve(commodity_count_);
  for (const auto& f : st.outflow) {
    RightConstantFn g(f.domain_start());
    for (std::size_t k = 0; k < f.size() && f.times()[k] <= up_to; ++k) g.append(f.times()[k], f.values()[k]);
    out.push_back(std::move(g));
  }
  return out;
}

std::optional<OutflowEvent> FlowOverTime::next_outflow_event(double after) const {
  std::optional<OutflowEvent> best;
  auto consider = [&](OutflowEvent ev) {
    if (!best || ev.time < best->time - kNumericTolerance) best = ev;
  };
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    if (auto t = edges_[e].total_outflow.next_breakpoint_after(after)) {
      consider({*t, e, OutflowEvent::Kind::kOutflowChange});
    }
    const auto& dep = edges_[e].depletions;
    auto it = std::upper_bound(dep.begin(), dep.end(), after + kNumericTolerance);
    if (it != dep.end()) consider({*it, e, OutflowEvent::Kind::kQueueDepletion});
  }
  return best;
}

double FlowOverTime::next_outflow_change(EdgeId e, double after) const {
  const auto& st = edges_[e];
  auto it = std::upper_bound(st.outflow_changes.begin(), st.outflow_changes.end(), after + kNumericTolerance);
  if (it != st.outflow_changes.end() && *it < st.exit_horizon) return *it;
  return st.exit_horizon;
}

// ---------------------------------------------------------------------------

FlowAudit audit_flow(const FlowOverTime& flow, double until) {
  FlowAudit audit;
  const auto& net = flow.network();
  for (EdgeId e = 0; e < flow.edge_count(); ++e) {
    const double tau = net.edge(e).transit_time;
    const double nu = net.edge(e).capacity;
    const double limit = std::min(until, flow.built_until(e));
    const auto cum_in = flow.total_inflow(e).cumulative();
    const auto cum_out = flow.total_outflow(e).cumulative();
    const auto& q = flow.queue(e);

    std::vector<double> grid;
    for (double t : q.times()) grid.push_back(t);
    for (double t : flow.total_inflow(e).times()) grid.push_back(t);
    for (double t : flow.total_outflow(e).times()) grid.push_back(t - tau);
    grid.push_back(limit);
    std::sort(grid.begin(), grid.end());
    const std::size_t n = grid.size();
    for (std::size_t k = 0; k + 1 < n; ++k) grid.push_back(0.5 * (grid[k] + grid[k + 1]));

    for (double t : grid) {
      if (t < 0.0 || t > limit) continue;
      const double fin = cum_in.eval(t);
      const double scale = std::max(1.0, fin);
      const double qt = q.eval(t);
      audit.queue_identity = std::max(audit.queue_identity, std::abs(qt - (fin - cum_out.eval(t + tau))) / scale);
      audit.negative_queue = std::max(audit.negative_queue, -qt);
      const double exit = t + tau + qt / nu;
      audit.fifo_identity = std::max(audit.fifo_identity, std::abs(fin - cum_out.eval(exit)) / scale);
    }
    for (double r : flow.total_outflow(e).values()) {
      audit.capacity_excess = std::max(audit.capacity_excess, (r - nu) / nu);
    }
    std::vector<double> out_grid(flow.total_outflow(e).times());
    for (CommodityId i = 0; i < flow.commodity_count(); ++i) {
      const auto& ts = flow.outflow(i, e).times();
      out_grid.insert(out_grid.end(), ts.begin(), ts.end());
    }
    for (double t : out_grid) {
      double s = 0.0;
      for (CommodityId i = 0; i < flow.commodity_count(); ++i) s += flow.outflow(i, e).eval(t);
      audit.commodity_split = std::max(audit.commodity_split, std::abs(s - flow.total_outflow(e).eval(t)));
    }
  }
  return audit;
}

}  // namespace dpe
