#include <gtest/gtest.h>

#include <random>
#include <string>

#include "dpe/errors.hpp"
#include "dpe/network.hpp"
#include "test_support.hpp"

using dpe::Network;
using dpe::Scenario;

namespace {

std::string fig3_json(const std::string& st_edge, const std::string& sink = "t") {
  return R"({"format": "dpe-scenario/1",
    "network": {"nodes": ["s", "v", "w", "t", "x"], "edges": [
      {"id": "sv", "tail": "s", "head": "v", "transit_time": 1, "capacity": 2},
      {"id": "vw", "tail": "v", "head": "w", "transit_time": 1, "capacity": 2},
      {"id": "wt", "tail": "w", "head": "t", "transit_time": 1, "capacity": 1},
      {"id": "ws", "tail": "w", "head": "s", "transit_time": 1, "capacity": 1},
      )" + st_edge + R"(]},
    "commodities": [{"id": "c", "source": "s", "sink": ")" + sink + R"(", "inflow": {"rate": 2, "until": 25},
                     "predictor": "zero"}],
    "simulation": {"prediction_step": 0.25, "horizon": 100, "inflow_cutoff": 25}})";
}

const std::string kStEdge = R"({"id": "st", "tail": "s", "head": "t", "transit_time": 3, "capacity": 1})";

}  // namespace

TEST(Scenario, Fig3FixtureLoads) {
  const Scenario sc = dpe::testing::fig3_scenario();
  EXPECT_EQ(sc.network.node_count(), 4u);
  EXPECT_EQ(sc.network.edge_count(), 5u);
  const auto sv = sc.network.find_edge("sv");
  ASSERT_TRUE(sv);
  EXPECT_DOUBLE_EQ(sc.network.edge(*sv).transit_time, 1.0);
  EXPECT_DOUBLE_EQ(sc.network.edge(*sv).capacity, 2.0);
  EXPECT_EQ(sc.network.node_name(sc.network.edge(*sv).tail), "s");
  ASSERT_EQ(sc.commodities.size(), 1u);
  EXPECT_EQ(sc.commodities[0].predictor, dpe::PredictorKind::kZero);
  EXPECT_DOUBLE_EQ(sc.commodities[0].inflow.integrate(0.0, 100.0), 50.0);
  EXPECT_NO_THROW(sc.validate());
}

TEST(Scenario, ZeroTransitTimeRejected) {
  const std::string bad = R"({"id": "st", "tail": "s", "head": "t", "transit_time": 0, "capacity": 1})";
  EXPECT_THROW((void)dpe::parse_scenario(fig3_json(bad)), dpe::ValidationError);
}

TEST(Scenario, UnreachableSinkRejected) {
  try {
    (void)dpe::parse_scenario(fig3_json(kStEdge, "x")).validate();
    FAIL() << "expected ValidationError";
  } catch (const dpe::ValidationError& ex) {
    EXPECT_NE(std::string(ex.what()).find("unreachable"), std::string::npos);
  }
}

TEST(Scenario, UnknownFormatRejected) {
  EXPECT_THROW((void)dpe::parse_scenario(R"({"format": "other/9", "network": {"edges": []}})"), dpe::ParseError);
}

TEST(Scenario, MalformedJsonRejected) {
  EXPECT_THROW((void)dpe::parse_scenario("{not json"), dpe::ParseError);
}

TEST(Scenario, MissingFileNamesPath) {
  try {
    (void)dpe::load_scenario("/nonexistent/where.json");
    FAIL() << "expected ValidationError";
  } catch (const dpe::ValidationError& ex) {
    EXPECT_NE(std::string(ex.what()).find("/nonexistent/where.json"), std::string::npos);
  }
}

TEST(Scenario, DumpParseRoundTrip) {
  const Scenario sc = dpe::testing::fig3_scenario();
  const Scenario back = dpe::parse_scenario(dpe::dump_scenario(sc));
  EXPECT_EQ(back, sc);
}

TEST(Scenario, HorizonBeforeCutoffRejected) {
  Scenario sc = dpe::testing::fig3_scenario();
  sc.simulation.horizon = 10.0;
  EXPECT_THROW(sc.validate(), dpe::ValidationError);
}

TEST(Network, DuplicateEdgeIdRejected) {
  Network net;
  net.add_node("a");
  net.add_node("b");
  net.add_edge("e", 0, 1, 1.0, 1.0);
  EXPECT_THROW(net.add_edge("e", 1, 0, 1.0, 1.0), dpe::ValidationError);
}

TEST(Network, FreeFlowDistances) {
  const Scenario sc = dpe::testing::fig3_scenario();
  const auto t = *sc.network.find_node("t");
  const auto d = sc.network.free_flow_distances_to(t);
  EXPECT_DOUBLE_EQ(d[*sc.network.find_node("s")], 3.0);
  EXPECT_DOUBLE_EQ(d[*sc.network.find_node("v")], 2.0);
  EXPECT_DOUBLE_EQ(d[*sc.network.find_node("w")], 1.0);
  EXPECT_DOUBLE_EQ(d[t], 0.0);
}

TEST(Tntp, SiouxFallsFile) {
  const Network net = dpe::import_tntp(dpe::testing::data_dir() / "SiouxFalls_net.tntp");
  // The published SiouxFalls_net.tntp lists 76 links over 24 nodes.
  EXPECT_EQ(net.edge_count(), 76u);
  EXPECT_EQ(net.node_count(), 24u);
  const auto e = net.edge(0);
  EXPECT_EQ(net.node_name(e.tail), "1");
  EXPECT_EQ(net.node_name(e.head), "2");
  EXPECT_DOUBLE_EQ(e.transit_time, 6.0);
  EXPECT_DOUBLE_EQ(e.capacity, 25900.201);
}

TEST(Tntp, EmptyEdgeSection) {
  const Network net = dpe::parse_tntp("<NUMBER OF NODES> 0\n<END OF METADATA>\n~ init term cap len fft ;\n");
  EXPECT_EQ(net.edge_count(), 0u);
}

TEST(Tntp, ZeroCapacityNamesEdge) {
  const std::string text =
      "<END OF METADATA>\n"
      "\t1\t2\t100\t1\t2\t0.15\t4\t0\t0\t1\t;\n"
      "\t2\t3\t0\t1\t2\t0.15\t4\t0\t0\t1\t;\n";
  try {
    (void)dpe::parse_tntp(text);
    FAIL() << "expected ValidationError";
  } catch (const dpe::ValidationError& ex) {
    const std::string msg = ex.what();
    EXPECT_NE(msg.find("2->3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("capacity"), std::string::npos) << msg;
  }
}

TEST(Tntp, ScaleFactors) {
  const std::string text = "<END OF METADATA>\n1 2 100 1 2 0.15 4 0 0 1 ;\n";
  const Network net = dpe::parse_tntp(text, {.time_scale = 0.5, .capacity_scale = 0.01});
  EXPECT_DOUBLE_EQ(net.edge(0).transit_time, 1.0);
  EXPECT_DOUBLE_EQ(net.edge(0).capacity, 1.0);
}

TEST(EdgeList, Fig3RowsMatchFixture) {
  const std::string text =
      "id,tail,head,transit_time,capacity\n"
      "sv,s,v,1,2\n"
      "vw,v,w,1,2\n"
      "wt,w,t,1,1\n"
      "ws,w,s,1,1\n"
      "st,s,t,3,1\n";
  const Network net = dpe::parse_edge_list(text);
  const Network fixture = dpe::testing::fig3_scenario().network;
  ASSERT_EQ(net.edge_count(), fixture.edge_count());
  for (dpe::EdgeId e = 0; e < net.edge_count(); ++e) {
    const auto& a = net.edge(e);
    const auto& b = fixture.edge(e);
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(net.node_name(a.tail), fixture.node_name(b.tail));
    EXPECT_EQ(net.node_name(a.head), fixture.node_name(b.head));
    EXPECT_EQ(a.transit_time, b.transit_time);
    EXPECT_EQ(a.capacity, b.capacity);
  }
}

TEST(EdgeList, DuplicateIdsRejected) {
  const std::string text = "id,tail,head,transit_time,capacity\na,x,y,1,1\na,y,x,1,1\n";
  EXPECT_THROW((void)dpe::parse_edge_list(text), dpe::ValidationError);
}

TEST(EdgeList, RoundTrip) {
  std::mt19937_64 rng(3);
  const Network net = dpe::testing::random_network(rng, 30, 60);
  EXPECT_EQ(dpe::parse_edge_list(dpe::dump_edge_list(net)), net);
}

TEST(CommodityGeneration, SeededAndReachable) {
  const Network net = dpe::import_tntp(dpe::testing::data_dir() / "SiouxFalls_net.tntp");
  dpe::CommodityGeneration opts;
  opts.count = 12;
  opts.seed = 42;
  const auto a = dpe::generate_commodities(net, opts);
  const auto b = dpe::generate_commodities(net, opts);
  ASSERT_EQ(a.size(), 12u);
  EXPECT_EQ(a, b);
  for (const auto& c : a) {
    EXPECT_NE(c.source, c.sink);
    EXPECT_TRUE(net.can_reach(c.sink)[c.source]);
    EXPECT_GT(c.inflow.eval(0.0), 0.0);
  }
  opts.seed = 43;
  EXPECT_NE(dpe::generate_commodities(net, opts), a);
}

TEST(PredictorKind, NamesRoundTrip) {
  for (auto k : {dpe::PredictorKind::kZero, dpe::PredictorKind::kConstant, dpe::PredictorKind::kLinear,
                 dpe::PredictorKind::kRegularizedLinear, dpe::PredictorKind::kRegression,
                 dpe::PredictorKind::kPerfect, dpe::PredictorKind::kThreshold}) {
    EXPECT_EQ(dpe::parse_predictor_kind(dpe::to_string(k)), k);
  }
  EXPECT_THROW((void)dpe::parse_predictor_kind("oracle"), dpe::ParseError);
}
