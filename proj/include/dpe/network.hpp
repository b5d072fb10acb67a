#pragma once

// Static problem description: graph, edge attributes, commodities and the
// simulation/predictor parameters of one experiment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpe/pwl.hpp"

namespace dpe {

using NodeId = std::size_t;
using EdgeId = std::size_t;
using CommodityId = std::size_t;

struct Edge {
  std::string id;
  NodeId tail = 0;
  NodeId head = 0;
  double transit_time = 0.0;  // tau_e, seconds
  double capacity = 0.0;      // nu_e, flow units per second

  friend bool operator==(const Edge&, const Edge&) = default;
};

class Network {
 public:
  NodeId add_node(std::string name);
  // Returns the existing node if `name` is known.
  NodeId ensure_node(const std::string& name);
  // Validates tau > 0, nu > 0 and endpoint existence.
  EdgeId add_edge(std::string id, NodeId tail, NodeId head, double transit_time, double capacity);

  [[nodiscard]] std::size_t node_count() const { return node_names_.size(); }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
  [[nodiscard]] const Edge& edge(EdgeId e) const { return edges_[e]; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] const std::string& node_name(NodeId v) const { return node_names_[v]; }
  [[nodiscard]] const std::vector<std::string>& node_names() const { return node_names_; }
  [[nodiscard]] std::optional<NodeId> find_node(std::string_view name) const;
  [[nodiscard]] std::optional<EdgeId> find_edge(std::string_view id) const;
  [[nodiscard]] const std::vector<EdgeId>& outgoing(NodeId v) const { return outgoing_[v]; }
  [[nodiscard]] const std::vector<EdgeId>& incoming(NodeId v) const { return incoming_[v]; }

  [[nodiscard]] double min_transit_time() const;
  // Nodes from which `target` can be reached.
  [[nodiscard]] std::vector<bool> can_reach(NodeId target) const;
  // Physical (queue-free) shortest travel time from every node to `target`; +inf if unreachable.
  [[nodiscard]] std::vector<double> free_flow_distances_to(NodeId target) const;

  friend bool operator==(const Network& a, const Network& b) {
    return a.node_names_ == b.node_names_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::string> node_names_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, EdgeId> edge_index_;
  std::vector<std::vector<EdgeId>> outgoing_;
  std::vector<std::vector<EdgeId>> incoming_;
};

enum class PredictorKind : std::uint8_t {
  kZero,
  kConstant,
  kLinear,
  kRegularizedLinear,
  kRegression,
  kPerfect,
  // Non-continuous step predictor used by the nonexistence demo.
  kThreshold,
};

[[nodiscard]] std::string_view to_string(PredictorKind kind);
// Throws ParseError on an unknown name.
[[nodiscard]] PredictorKind parse_predictor_kind(std::string_view name);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PredictorParams {
  double rolling_horizon = 1.0;         // delta of the regularized linear predictor
  double prediction_horizon = kInfinity;  // H of the (regularized) linear predictor
  int sample_count = 10;                // k past samples of the regression predictor
  double sample_step = 1.0;             // sample spacing of the regression predictor
  int future_steps = 20;                // predicted points of the regression predictor
  std::string regression_model;         // model file, relative to the scenario file
  double threshold = 1.0;               // threshold predictor: switch level
  double threshold_value = 2.0;         // threshold predictor: queue predicted at or above the level

  friend bool operator==(const PredictorParams&, const PredictorParams&) = default;
};

struct SimulationParams {
  double prediction_step = 0.25;  // epsilon
  double horizon = 100.0;         // H
  double inflow_cutoff = 25.0;    // h
  double active_tolerance = 1e-9;
  double prune_epsilon = 0.0;     // lossy label pruning; 0 keeps labels exact

  friend bool operator==(const SimulationParams&, const SimulationParams&) = default;
};

struct Commodity {
  std::string id;
  NodeId source = 0;
  NodeId sink = 0;
  RightConstantFn inflow;  // u_i
  PredictorKind predictor = PredictorKind::kConstant;

  friend bool operator==(const Commodity&, const Commodity&) = default;
};

// Constant rate on [0, until), zero afterwards.
[[nodiscard]] RightConstantFn block_inflow(double rate, double until);

struct Scenario {
  Network network;
  std::vector<Commodity> commodities;
  SimulationParams simulation;
  PredictorParams predictors;
  // Directory relative paths in the file resolve against.
  std::filesystem::path base_dir;

  // Throws ValidationError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const Scenario& a, const Scenario& b) {
    return a.network == b.network && a.commodities == b.commodities && a.simulation == b.simulation &&
           a.predictors == b.predictors;
  }
};

inline constexpr std::string_view kScenarioFormat = "dpe-scenario/1";

[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
[[nodiscard]] std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

struct TntpOptions {
  double time_scale = 1.0;
  double capacity_scale = 1.0;
};

[[nodiscard]] Network import_tntp(const std::filesystem::path& path, const TntpOptions& options = {});
[[nodiscard]] Network parse_tntp(std::string_view text, const TntpOptions& options = {});

// CSV with header `tail,head,transit_time,capacity` (optional `id` column).
[[nodiscard]] Network import_edge_list(const std::filesystem::path& path);
[[nodiscard]] Network parse_edge_list(std::string_view text);
[[nodiscard]] std::string dump_edge_list(const Network& network);

struct CommodityGeneration {
  std::size_t count = 1;
  std::uint64_t seed = 1;
  double capacity_factor = 0.2;  // rate = factor * total capacity leaving the source
  double until = 25.0;
  PredictorKind predictor = PredictorKind::kConstant;
  std::string id_prefix = "c";
};

// Picks source/sink pairs uniformly among pairs connected by a path.
[[nodiscard]] std::vector<Commodity> generate_commodities(const Network& network, const CommodityGeneration& options);

}  // namespace dpe
