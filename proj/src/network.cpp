#include "dpe/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpe/errors.hpp"

namespace dpe {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Network

NodeId Network::add_node(std::string name) {
  if (node_index_.contains(name)) throw ValidationError("duplicate node id '" + name + "'");
  const NodeId v = node_names_.size();
  node_index_.emplace(name, v);
  node_names_.push_back(std::move(name));
  outgoing_.emplace_back();
  incoming_.emplace_back();
  return v;
}

NodeId Network::ensure_node(const std::string& name) {
  if (auto it = node_index_.find(name); it != node_index_.end()) return it->second;
  return add_node(name);
}

EdgeId Network::add_edge(std::string id, NodeId tail, NodeId head, double transit_time, double capacity) {
  if (tail >= node_count() || head >= node_count()) {
    throw ValidationError("edge '" + id + "' references a node that does not exist");
  }
  if (!(transit_time > 0.0) || !std::isfinite(transit_time)) {
    throw ValidationError("transit time must be positive: edge '" + id + "' has " + std::to_string(transit_time));
  }
  if (!(capacity > 0.0) || !std::isfinite(capacity)) {
    throw ValidationError("capacity must be positive: edge '" + id + "' has " + std::to_string(capacity));
  }
  if (edge_index_.contains(id)) throw ValidationError("duplicate edge id '" + id + "'");
  const EdgeId e = edges_.size();
  edge_index_.emplace(id, e);
  edges_.push_back(Edge{std::move(id), tail, head, transit_time, capacity});
  outgoing_[tail].push_back(e);
  incoming_[head].push_back(e);
  return e;
}

std::optional<NodeId> Network::find_node(std::string_view name) const {
  if (auto it = node_index_.find(std::string(name)); it != node_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<EdgeId> Network::find_edge(std::string_view id) const {
  if (auto it = edge_index_.find(std::string(id)); it != edge_index_.end()) return it->second;
  return std::nullopt;
}

double Network::min_transit_time() const {
  double m = kInfinity;
  for (const auto& e : edges_) m = std::min(m, e.transit_time);
  return m;
}

std::vector<bool> Network::can_reach(NodeId target) const {
  std::vector<bool> seen(node_count(), false);
  std::deque<NodeId> todo{target};
  seen[target] = true;
  while (!todo.empty()) {
    const NodeId w = todo.front();
    todo.pop_front();
    for (EdgeId e : incoming_[w]) {
      const NodeId v = edges_[e].tail;
      if (!seen[v]) {
        seen[v] = true;
        todo.push_back(v);
      }
    }
  }
  return seen;
}

std::vector<double> Network::free_flow_distances_to(NodeId target) const {
  std::vector<double> dist(node_count(), kInfinity);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[target] = 0.0;
  heap.emplace(0.0, target);
  while (!heap.empty()) {
    auto [d, w] = heap.top();
    heap.pop();
    if (d > dist[w]) continue;
    for (EdgeId e : incoming_[w]) {
      const NodeId v = edges_[e].tail;
      const double nd = d + edges_[e].transit_time;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Predictor names

std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kZero: return "zero";
    case PredictorKind::kConstant: return "constant";
    case PredictorKind::kLinear: return "linear";
    case PredictorKind::kRegularizedLinear: return "regularized_linear";
    case PredictorKind::kRegression: return "regression";
    case PredictorKind::kPerfect: return "perfect";
    case PredictorKind::kThreshold: return "threshold";
  }
  return "unknown";
}

PredictorKind parse_predictor_kind(std::string_view name) {
  for (auto kind : {PredictorKind::kZero, PredictorKind::kConstant, PredictorKind::kLinear,
                    PredictorKind::kRegularizedLinear, PredictorKind::kRegression, PredictorKind::kPerfect,
                    PredictorKind::kThreshold}) {
    if (to_string(kind) == name) return kind;
  }
  throw ParseError("unknown predictor '" + std::string(name) + "'");
}

RightConstantFn block_inflow(double rate, double until) {
  RightConstantFn u(0.0);
  if (rate > 0.0 && until > 0.0) {
    u.append(0.0, rate);
    u.append(until, 0.0);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Scenario validation

void Scenario::validate() const {
  const auto& sim = simulation;
  if (!(sim.prediction_step > 0.0)) throw ValidationError("prediction step epsilon must be positive");
  if (!(sim.inflow_cutoff >= 0.0)) throw ValidationError("inflow cutoff h must be non-negative");
  if (!(sim.horizon >= sim.inflow_cutoff)) throw ValidationError("horizon H must be at least the inflow cutoff h");
  if (!(sim.active_tolerance >= 0.0)) throw ValidationError("active tolerance must be non-negative");
  if (!(sim.prune_epsilon >= 0.0)) throw ValidationError("prune epsilon must be non-negative");
  if (!(predictors.rolling_horizon > 0.0)) throw ValidationError("rolling horizon delta must be positive");
  if (!(predictors.prediction_horizon >= 0.0)) throw ValidationError("prediction horizon must be non-negative");
  if (predictors.sample_count < 1) throw ValidationError("sample count k must be at least 1");
  if (!(predictors.sample_step > 0.0)) throw ValidationError("sample step must be positive");
  if (predictors.future_steps < 1) throw ValidationError("future steps must be at least 1");

  for (const auto& e : network.edges()) {
    if (!(e.transit_time > 0.0)) throw ValidationError("transit time must be positive: edge '" + e.id + "'");
    if (!(e.capacity > 0.0)) throw ValidationError("capacity must be positive: edge '" + e.id + "'");
  }
  for (std::size_t i = 0; i < commodities.size(); ++i) {
    const auto& c = commodities[i];
    const std::string name = "commodity " + std::to_string(i) + " ('" + c.id + "')";
    if (c.source >= network.node_count() || c.sink >= network.node_count()) {
      throw ValidationError(name + " references a node that does not exist");
    }
    if (c.source == c.sink) throw ValidationError("source equals sink for " + name);
    for (double v : c.inflow.values()) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("inflow rate must be non-negative for " + name);
    }
    if (c.inflow.last_value() != 0.0) throw ValidationError("inflow must have finite support for " + name);
    if (!network.can_reach(c.sink)[c.source]) throw ValidationError("sink unreachable from source for " + name);
  }
}

// ---------------------------------------------------------------------------
// Scenario JSON

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw ParseError(ctx + ": field '" + key + "': " + ex.what());
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& ctx) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return field<T>(obj, key, ctx);
}

std::string node_ref(const json& v, const std::string& ctx) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(ctx + ": node reference must be a string or integer");
}

Network parse_inline_network(const json& net) {
  Network network;
  if (net.contains("nodes")) {
    for (const auto& n : net.at("nodes")) network.add_node(node_ref(n, "network.nodes"));
  }
  if (!net.contains("edges")) throw ParseError("network: missing field 'edges'");
  std::size_t k = 0;
  for (const auto& e : net.at("edges")) {
    const std::string ctx = "network.edges[" + std::to_string(k) + "]";
    if (!e.contains("tail") || !e.contains("head")) throw ParseError(ctx + ": missing 'tail' or 'head'");
    const NodeId tail = network.ensure_node(node_ref(e.at("tail"), ctx));
    const NodeId head = network.ensure_node(node_ref(e.at("head"), ctx));
    std::string id = e.contains("id") ? node_ref(e.at("id"), ctx) : std::to_string(k);
    network.add_edge(std::move(id), tail, head, field<double>(e, "transit_time", ctx), field<double>(e, "capacity", ctx));
    ++k;
  }
  return network;
}

RightConstantFn parse_inflow(const json& u, const std::string& ctx) {
  if (u.contains("breakpoints")) {
    std::vector<double> ts;
    std::vector<double> vs;
    for (const auto& bp : u.at("breakpoints")) {
      if (!bp.is_array() || bp.size() != 2) throw ParseError(ctx + ": breakpoints must be [time, rate] pairs");
      ts.push_back(bp[0].get<double>());
      vs.push_back(bp[1].get<double>());
    }
    try {
      return RightConstantFn(std::move(ts), std::move(vs), 0.0);
    } catch (const PreconditionError& ex) {
      throw ValidationError(ctx + ": " + ex.what());
    }
  }
  return block_inflow(field<double>(u, "rate", ctx), field<double>(u, "until", ctx));
}

json dump_inflow(const RightConstantFn& u) {
  json bps = json::array();
  for (std::size_t k = 0; k < u.size(); ++k) bps.push_back({u.times()[k], u.values()[k]});
  return {{"breakpoints", bps}};
}

json dump_number(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ParseError(std::string("scenario: ") + ex.what());
  }
  if (!doc.is_object()) throw ParseError("scenario: top level must be an object");
  const auto format = field_or<std::string>(doc, "format", std::string(kScenarioFormat), "scenario");
  if (format != kScenarioFormat) throw ParseError("scenario: unsupported format '" + format + "'");

  Scenario sc;
  sc.base_dir = base_dir;
  if (!doc.contains("network")) throw ParseError("scenario: missing field 'network'");
  const json& net = doc.at("network");
  if (net.contains("tntp")) {
    TntpOptions opts;
    opts.time_scale = field_or<double>(net, "time_scale", 1.0, "network");
    opts.capacity_scale = field_or<double>(net, "capacity_scale", 1.0, "network");
    sc.network = import_tntp(base_dir / field<std::string>(net, "tntp", "network"), opts);
  } else if (net.contains("edge_list")) {
    sc.network = import_edge_list(base_dir / field<std::string>(net, "edge_list", "network"));
  } else {
    sc.network = parse_inline_network(net);
  }

  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    auto& p = sc.simulation;
    p.prediction_step = field_or<double>(s, "prediction_step", p.prediction_step, "simulation");
    p.horizon = field_or<double>(s, "horizon", p.horizon, "simulation");
    p.inflow_cutoff = field_or<double>(s, "inflow_cutoff", p.inflow_cutoff, "simulation");
    p.active_tolerance = field_or<double>(s, "active_tolerance", p.active_tolerance, "simulation");
    p.prune_epsilon = field_or<double>(s, "prune_epsilon", p.prune_epsilon, "simulation");
  }
  if (doc.contains("predictors")) {
    const json& s = doc.at("predictors");
    auto& p = sc.predictors;
    p.rolling_horizon = field_or<double>(s, "rolling_horizon", p.rolling_horizon, "predictors");
    p.prediction_horizon = field_or<double>(s, "prediction_horizon", kInfinity, "predictors");
    p.sample_count = field_or<int>(s, "sample_count", p.sample_count, "predictors");
    p.sample_step = field_or<double>(s, "sample_step", p.sample_step, "predictors");
    p.future_steps = field_or<int>(s, "future_steps", p.future_steps, "predictors");
    p.regression_model = field_or<std::string>(s, "regression_model", p.regression_model, "predictors");
    p.threshold = field_or<double>(s, "threshold", p.threshold, "predictors");
    p.threshold_value = field_or<double>(s, "threshold_value", p.threshold_value, "predictors");
  }

  if (doc.contains("commodities")) {
    std::size_t k = 0;
    for (const auto& c : doc.at("commodities")) {
      const std::string ctx = "commodities[" + std::to_string(k) + "]";
      Commodity com;
      com.id = c.contains("id") ? node_ref(c.at("id"), ctx) : std::to_string(k);
      const auto src = node_ref(c.at("source"), ctx);
      const auto dst = node_ref(c.at("sink"), ctx);
      auto s = sc.network.find_node(src);
      auto t = sc.network.find_node(dst);
      if (!s) throw ValidationError(ctx + ": source node '" + src + "' does not exist");
      if (!t) throw ValidationError(ctx + ": sink node '" + dst + "' does not exist");
      com.source = *s;
      com.sink = *t;
      if (!c.contains("inflow")) throw ParseError(ctx + ": missing field 'inflow'");
      com.inflow = parse_inflow(c.at("inflow"), ctx + ".inflow");
      com.predictor = parse_predictor_kind(field_or<std::string>(c, "predictor", "constant", ctx));
      sc.commodities.push_back(std::move(com));
      ++k;
    }
  }
  if (doc.contains("commodity_generation")) {
    const json& g = doc.at("commodity_generation");
    CommodityGeneration gen;
    gen.count = field_or<std::size_t>(g, "count", gen.count, "commodity_generation");
    gen.seed = field_or<std::uint64_t>(g, "seed", gen.seed, "commodity_generation");
    gen.capacity_factor = field_or<double>(g, "capacity_factor", gen.capacity_factor, "commodity_generation");
    gen.until = field_or<double>(g, "until", sc.simulation.inflow_cutoff, "commodity_generation");
    gen.predictor =
        parse_predictor_kind(field_or<std::string>(g, "predictor", "constant", "commodity_generation"));
    gen.id_prefix = field_or<std::string>(g, "id_prefix", gen.id_prefix, "commodity_generation");
    auto generated = generate_commodities(sc.network, gen);
    sc.commodities.insert(sc.commodities.end(), generated.begin(), generated.end());
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("scenario file does not exist: " + path.string());
  return parse_scenario(read_file(path), path.parent_path());
}

std::string dump_scenario(const Scenario& sc) {
  json doc;
  doc["format"] = kScenarioFormat;
  json nodes = json::array();
  for (const auto& n : sc.network.node_names()) nodes.push_back(n);
  json edges = json::array();
  for (const auto& e : sc.network.edges()) {
    edges.push_back({{"id", e.id},
                     {"tail", sc.network.node_name(e.tail)},
                     {"head", sc.network.node_name(e.head)},
                     {"transit_time", e.transit_time},
                     {"capacity", e.capacity}});
  }
  doc["network"] = {{"nodes", nodes}, {"edges", edges}};
  json coms = json::array();
  for (const auto& c : sc.commodities) {
    coms.push_back({{"id", c.id},
                    {"source", sc.network.node_name(c.source)},
                    {"sink", sc.network.node_name(c.sink)},
                    {"inflow", dump_inflow(c.inflow)},
                    {"predictor", to_string(c.predictor)}});
  }
  doc["commodities"] = coms;
  const auto& s = sc.simulation;
  doc["simulation"] = {{"prediction_step", s.prediction_step},
                       {"horizon", s.horizon},
                       {"inflow_cutoff", s.inflow_cutoff},
                       {"active_tolerance", s.active_tolerance},
                       {"prune_epsilon", s.prune_epsilon}};
  const auto& p = sc.predictors;
  doc["predictors"] = {{"rolling_horizon", p.rolling_horizon},
                       {"prediction_horizon", dump_number(p.prediction_horizon)},
                       {"sample_count", p.sample_count},
                       {"sample_step", p.sample_step},
                       {"future_steps", p.future_steps},
                       {"regression_model", p.regression_model},
                       {"threshold", p.threshold},
                       {"threshold_value", p.threshold_value}};
  return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << dump_scenario(scenario);
}

// ---------------------------------------------------------------------------
// TNTP

Network parse_tntp(std::string_view text, const TntpOptions& options) {
  Network network;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared_nodes = 0;
  bool in_metadata = true;
  std::size_t link = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find_first_not_of(" \t\r"); c == std::string::npos) continue;
    if (in_metadata) {
      if (line.find("<END OF METADATA>") != std::string::npos) {
        in_metadata = false;
        for (std::size_t v = 1; v <= declared_nodes; ++v) network.ensure_node(std::to_string(v));
        continue;
      }
      if (auto pos = line.find("<NUMBER OF NODES>"); pos != std::string::npos) {
        declared_nodes = std::stoul(line.substr(pos + 17));
        continue;
      }
      if (line.find('<') != std::string::npos) continue;
      // Files without a metadata block start right away with data.
      in_metadata = false;
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (line[first] == '~') continue;
    std::string body = line.substr(0, line.find(';'));
    std::istringstream fields(body);
    std::vector<std::string> cols;
    for (std::string tok; fields >> tok;) cols.push_back(tok);
    if (cols.empty()) continue;
    const std::string ctx = "tntp line " + std::to_string(line_no);
    if (cols.size() < 5) throw ParseError(ctx + ": expected at least 5 columns (init, term, capacity, length, free flow time)");
    double capacity = 0.0;
    double fft = 0.0;
    try {
      capacity = std::stod(cols[2]) * options.capacity_scale;
      fft = std::stod(cols[4]) * options.time_scale;
    } catch (const std::exception&) {
      throw ParseError(ctx + ": non-numeric capacity or free flow time");
    }
    ++link;
    const NodeId tail = network.ensure_node(cols[0]);
    const NodeId head = network.ensure_node(cols[1]);
    try {
      network.add_edge(std::to_string(link), tail, head, fft, capacity);
    } catch (const ValidationError& ex) {
      throw ValidationError(ctx + " (" + cols[0] + "->" + cols[1] + "): " + ex.what());
    }
  }
  return network;
}

Network import_tntp(const std::filesystem::path& path, const TntpOptions& options) {
  return parse_tntp(read_file(path), options);
}

// ---------------------------------------------------------------------------
// Edge list

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

Network parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("edge list: missing header row");
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto tail_col = column("tail");
  const auto head_col = column("head");
  const auto tau_col = column("transit_time");
  const auto nu_col = column("capacity");
  const auto id_col = column("id");
  if (!tail_col || !head_col || !tau_col || !nu_col) {
    throw ParseError("edge list: header must contain tail,head,transit_time,capacity");
  }
  Network network;
  std::size_t line_no = 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cols = split_csv(line);
    const std::string ctx = "edge list line " + std::to_string(line_no);
    if (cols.size() < header.size()) throw ParseError(ctx + ": expected " + std::to_string(header.size()) + " columns");
    double tau = 0.0;
    double nu = 0.0;
    try {
      tau = std::stod(cols[*tau_col]);
      nu = std::stod(cols[*nu_col]);
    } catch (const std::exception&) {
      throw ParseError(ctx + ": non-numeric transit_time or capacity");
    }
    const NodeId tail = network.ensure_node(cols[*tail_col]);
    const NodeId head = network.ensure_node(cols[*head_col]);
    std::string id = id_col ? cols[*id_col] : std::to_string(row);
    try {
      network.add_edge(std::move(id), tail, head, tau, nu);
    } catch (const ValidationError& ex) {
      throw ValidationError(ctx + ": " + ex.what());
    }
    ++row;
  }
  return network;
}

Network import_edge_list(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    const std::string text = read_file(path);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& ex) {
      throw ParseError(std::string("edge list: ") + ex.what());
    }
    return parse_inline_network(doc);
  }
  return parse_edge_list(read_file(path));
}

std::string dump_edge_list(const Network& network) {
  std::ostringstream out;
  out.precision(17);
  out << "id,tail,head,transit_time,capacity\n";
  for (const auto& e : network.edges()) {
    out << e.id << ',' << network.node_name(e.tail) << ',' << network.node_name(e.head) << ',' << e.transit_time << ','
        << e.capacity << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Commodity generation

std::vector<Commodity> generate_commodities(const Network& network, const CommodityGeneration& options) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId t = 0; t < network.node_count(); ++t) {
    const auto reach = network.can_reach(t);
    for (NodeId s = 0; s < network.node_count(); ++s) {
      if (s != t && reach[s]) pairs.emplace_back(s, t);
    }
  }
  if (pairs.empty() && options.count > 0) throw ValidationError("no connected source/sink pair to generate commodities");
  std::mt19937_64 rng(options.seed);
  std::vector<Commodity> out;
  for (std::size_t k = 0; k < options.count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    const auto [s, t] = pairs[pick(rng)];
    double out_capacity = 0.0;
    for (EdgeId e : network.outgoing(s)) out_capacity += network.edge(e).capacity;
    Commodity c;
    c.id = options.id_prefix + std::to_string(k);
    c.source = s;
    c.sink = t;
    c.inflow = block_inflow(options.capacity_factor * out_capacity, options.until);
    c.predictor = options.predictor;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace dpe
