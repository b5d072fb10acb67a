#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dpe/errors.hpp"
#include "dpe/flow_state.hpp"
#include "dpe/simulation.hpp"
#include "test_support.hpp"

using dpe::FlowOverTime;
using dpe::Network;

namespace {

Network single_edge(double tau, double nu) {
  Network net;
  net.add_node("a");
  net.add_node("b");
  net.add_edge("e", 0, 1, tau, nu);
  return net;
}

// Exit time T_e(t) = t + tau + q(t) / nu.
double exit_time(const FlowOverTime& flow, dpe::EdgeId e, double t) {
  const auto& edge = flow.network().edge(e);
  return t + edge.transit_time + flow.queue(e).eval(t) / edge.capacity;
}

// Fixed-step point-queue simulator with static routing fractions. Records the
// aggregate outflow rate of every edge on the step grid.
struct GridSimulator {
  const Network& net;
  double dt;
  std::vector<std::vector<double>> outflow;  // [edge][step]
  std::vector<std::vector<double>> queue;    // [edge][step]

  // split[v][e]: share of node v's inflow sent on outgoing edge e.
  void run(dpe::NodeId source, dpe::NodeId sink, double rate, double until, double horizon,
           const std::vector<double>& split) {
    const std::size_t steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const std::size_t m = net.edge_count();
    outflow.assign(m, std::vector<double>(steps, 0.0));
    queue.assign(m, std::vector<double>(steps, 0.0));
    std::vector<double> q(m, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = (static_cast<double>(k) + 0.5) * dt;
      std::vector<double> node_in(net.node_count(), 0.0);
      if (t < until) node_in[source] += rate;
      for (dpe::EdgeId e = 0; e < m; ++e) node_in[net.edge(e).head] += outflow[e][k];
      for (dpe::EdgeId e = 0; e < m; ++e) {
        const auto& edge = net.edge(e);
        const double in = edge.tail == sink ? 0.0 : node_in[edge.tail] * split[e];
        const double leave = q[e] > 1e-12 ? edge.capacity : std::min(in, edge.capacity);
        q[e] = std::max(0.0, q[e] + (in - leave) * dt);
        queue[e][k] = q[e];
        const std::size_t exit = k + static_cast<std::size_t>(std::llround(edge.transit_time / dt));
        if (exit < steps) outflow[e][exit] = leave;
      }
    }
  }

  // Times at which the outflow rate of e jumps by more than `jump`.
  std::vector<double> change_times(dpe::EdgeId e, double jump) const {
    std::vector<double> out;
    for (std::size_t k = 1; k < outflow[e].size(); ++k) {
      if (std::abs(outflow[e][k] - outflow[e][k - 1]) > jump) out.push_back(static_cast<double>(k) * dt);
    }
    return out;
  }
};

}  // namespace

TEST(FlowOverTime, QueueGrowsAtExcessRate) {
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 2.0, 0.0, 1.0);
  EXPECT_NEAR(flow.queue(0).eval(1.0), 1.0, 1e-12);
  EXPECT_NEAR(flow.queue(0).slope_left_of(1.0), 1.0, 1e-12);
}

TEST(FlowOverTime, QueueDrainsAtCapacity) {
  // A queue of 1 at time 1 with no further inflow is gone at time 2.
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 2.0, 0.0, 1.0);
  flow.assign_inflow(0, 0, 0.0, 1.0, 3.0);
  EXPECT_NEAR(flow.queue(0).eval(1.5), 0.5, 1e-12);
  EXPECT_NEAR(flow.queue(0).eval(2.0), 0.0, 1e-12);
  EXPECT_NEAR(flow.queue(0).eval(2.7), 0.0, 1e-12);
  ASSERT_EQ(flow.depletion_times(0).size(), 1u);
  EXPECT_NEAR(flow.depletion_times(0)[0], 2.0, 1e-12);
}

TEST(FlowOverTime, DepletionWithInflowBelowCapacity) {
  // nu = 2: queue 0.5 at time 0.5, then inflow 1 drains it at net rate 1.
  const Network net = single_edge(1.0, 2.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 3.0, 0.0, 0.5);
  EXPECT_NEAR(flow.queue(0).eval(0.5), 0.5, 1e-12);
  flow.assign_inflow(0, 0, 1.0, 0.5, 1.5);
  ASSERT_EQ(flow.depletion_times(0).size(), 1u);
  EXPECT_NEAR(flow.depletion_times(0)[0], 1.0, 1e-12);
  EXPECT_NEAR(flow.queue(0).eval(1.25), 0.0, 1e-12);
}

TEST(FlowOverTime, OutflowOfQueuedBlock) {
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 2.0, 0.0, 1.0);
  flow.assign_inflow(0, 0, 0.0, 1.0, 10.0);
  const auto& out = flow.outflow(0, 0);
  EXPECT_DOUBLE_EQ(out.eval(0.5), 0.0);
  EXPECT_DOUBLE_EQ(out.eval(1.0), 1.0);
  EXPECT_DOUBLE_EQ(out.eval(2.999), 1.0);
  EXPECT_DOUBLE_EQ(out.eval(3.0), 0.0);
  // Cumulative oracle F-(T(t)) = F+(t).
  const auto Fin = flow.inflow(0, 0).cumulative();
  const auto Fout = out.cumulative();
  for (double t = 0.0; t <= 5.0; t += 0.01) EXPECT_NEAR(Fout.eval(exit_time(flow, 0, t)), Fin.eval(t), 1e-12);
}

TEST(FlowOverTime, SymmetricCommoditySplit) {
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 2);
  const std::vector<double> rates{1.0, 1.0};
  flow.assign_inflow(0, rates, 0.0, 2.0);
  flow.assign_inflow(0, std::vector<double>{0.0, 0.0}, 2.0, 10.0);
  for (double t = 1.0; t < 5.0; t += 0.1) {
    EXPECT_DOUBLE_EQ(flow.outflow(0, 0).eval(t), flow.outflow(1, 0).eval(t));
    EXPECT_DOUBLE_EQ(flow.outflow(0, 0).eval(t) + flow.outflow(1, 0).eval(t), flow.total_outflow(0).eval(t));
  }
  EXPECT_NEAR(flow.outflow(0, 0).eval(2.0), 0.5, 1e-12);
}

TEST(FlowOverTime, FifoAcrossCommodities) {
  // Commodity 0 builds a queue of 1, commodity 1 enters behind it.
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 2);
  flow.assign_inflow(0, 0, 2.0, 0.0, 1.0);
  flow.assign_inflow(1, 0, 1.0, 1.0, 2.0);
  flow.assign_inflow(0, std::vector<double>{0.0, 0.0}, 2.0, 10.0);
  EXPECT_DOUBLE_EQ(flow.outflow(0, 0).eval(2.5), 1.0);
  EXPECT_DOUBLE_EQ(flow.outflow(1, 0).eval(2.5), 0.0);
  EXPECT_DOUBLE_EQ(flow.outflow(1, 0).eval(3.5), 1.0);
  EXPECT_DOUBLE_EQ(flow.outflow(0, 0).eval(3.5), 0.0);
  EXPECT_DOUBLE_EQ(flow.outflow(1, 0).eval(4.0), 0.0);
}

TEST(FlowOverTime, ZeroInflowZeroOutflow) {
  const Network net = single_edge(2.0, 1.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 0.0, 0.0, 10.0);
  EXPECT_TRUE(flow.total_outflow(0).empty() || flow.total_outflow(0).integrate(0.0, 12.0) == 0.0);
  EXPECT_FALSE(flow.next_outflow_event(0.0).has_value());
}

TEST(FlowOverTime, SteadyStateHasNoEvent) {
  const Network net = single_edge(1.0, 2.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 1.0, 0.0, 10.0);
  const auto ev = flow.next_outflow_event(1.5);
  EXPECT_FALSE(ev.has_value() && ev->time < 10.0);
}

TEST(FlowOverTime, DepletionEventReported) {
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 2.0, 0.0, 1.0);
  flow.assign_inflow(0, 0, 0.0, 1.0, 5.0);
  const auto ev = flow.next_outflow_event(1.5);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->kind, dpe::OutflowEvent::Kind::kQueueDepletion);
  EXPECT_NEAR(ev->time, 2.0, 1e-12);
  const auto next = flow.next_outflow_event(2.0);
  ASSERT_TRUE(next);
  EXPECT_EQ(next->kind, dpe::OutflowEvent::Kind::kOutflowChange);
  EXPECT_NEAR(next->time, 3.0, 1e-12);
}

TEST(FlowOverTime, OutflowBeyondHorizonThrows) {
  const Network net = single_edge(1.0, 1.0);
  FlowOverTime flow(net, 1);
  flow.assign_inflow(0, 0, 1.0, 0.0, 1.0);
  EXPECT_THROW((void)flow.compute_outflow(0, 50.0), dpe::PreconditionError);
}

TEST(FlowOverTime, RandomPiecesSatisfyInvariants) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Network net = single_edge(dpe::testing::uniform(rng, 0.2, 3.0), dpe::testing::uniform(rng, 0.3, 3.0));
    FlowOverTime flow(net, 3);
    double t = 0.0;
    for (int k = 0; k < 30; ++k) {
      const double len = dpe::testing::uniform(rng, 0.05, 1.5);
      std::vector<double> rates(3);
      for (auto& r : rates) r = rng() % 3 == 0 ? 0.0 : dpe::testing::uniform(rng, 0.0, 2.0);
      flow.assign_inflow(0, rates, t, t + len);
      t += len;
    }
    const auto audit = dpe::audit_flow(flow, t);
    EXPECT_LE(audit.queue_identity, 1e-9);
    EXPECT_LE(audit.negative_queue, 0.0);
    EXPECT_LE(audit.capacity_excess, 1e-9);
    EXPECT_LE(audit.fifo_identity, 1e-9);
    EXPECT_LE(audit.commodity_split, 1e-9);
    // Per-commodity FIFO: F+_i(s) = F-_i(T(s)) wherever T(s) is known.
    for (std::size_t i = 0; i < 3; ++i) {
      const auto Fin = flow.inflow(i, 0).cumulative();
      const auto Fout = flow.outflow(i, 0).cumulative();
      for (int k = 0; k < 200; ++k) {
        const double s = dpe::testing::uniform(rng, 0.0, t);
        const double T = exit_time(flow, 0, s);
        if (T > flow.outflow_known_until(0)) continue;
        EXPECT_NEAR(Fout.eval(T), Fin.eval(s), 1e-9 * std::max(1.0, Fin.eval(s)));
      }
    }
  }
}

TEST(FlowOverTime, Fig3EventsMatchGridSimulator) {
  dpe::Scenario sc = dpe::testing::fig3_scenario();
  sc.commodities[0].inflow = dpe::block_inflow(4.0, 25.0);
  const auto result = dpe::run(sc);
  const Network& net = sc.network;

  // Zero predictor: static routing, s splits equally, v and w forward to t.
  std::vector<double> split(net.edge_count(), 0.0);
  split[*net.find_edge("sv")] = 0.5;
  split[*net.find_edge("st")] = 0.5;
  split[*net.find_edge("vw")] = 1.0;
  split[*net.find_edge("wt")] = 1.0;
  const double dt = 1e-4;
  GridSimulator grid{net, dt, {}, {}};
  grid.run(*net.find_node("s"), *net.find_node("t"), 4.0, 25.0, 60.0, split);

  for (dpe::EdgeId e = 0; e < net.edge_count(); ++e) {
    const auto oracle = grid.change_times(e, 0.1);
    std::vector<double> exact;
    const auto& out = result.flow.total_outflow(e);
    double prev = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (out.times()[k] < 60.0 && std::abs(out.values()[k] - prev) > 0.1) exact.push_back(out.times()[k]);
      prev = out.values()[k];
    }
    ASSERT_EQ(exact.size(), oracle.size()) << net.edge(e).id;
    for (std::size_t k = 0; k < exact.size(); ++k) EXPECT_NEAR(exact[k], oracle[k], 2 * dt) << net.edge(e).id;
    for (int k = 1; k < 60; ++k) {
      const std::size_t step = static_cast<std::size_t>(k / dt) - 1;
      EXPECT_NEAR(result.flow.queue(e).eval(k), grid.queue[e][step], 1e-2) << net.edge(e).id << " t=" << k;
    }
  }
  // The first outflow change is the sv edge at time 1; wt saturates at 3.
  const auto first = result.flow.next_outflow_event(0.0);
  ASSERT_TRUE(first);
  EXPECT_EQ(net.edge(first->edge).id, "sv");
  EXPECT_NEAR(first->time, 1.0, 1e-12);
  const auto wt = *net.find_edge("wt");
  EXPECT_NEAR(result.flow.total_outflow(wt).eval(3.0), 1.0, 1e-12);
  EXPECT_NEAR(result.flow.queue(wt).eval(27.0), 25.0, 1e-9);
}
