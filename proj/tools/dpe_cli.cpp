// dpe: command line front end for the prediction equilibrium simulator.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "dpe/errors.hpp"
#include "dpe/network.hpp"
#include "dpe/regression.hpp"
#include "dpe/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string scenario;
  std::string out = ".";
  std::optional<double> epsilon;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  std::string predictor_overrides;
  std::string model;
  std::string format = "csv";
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("dpe");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DPE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dpe::ValidationError("cannot open file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  spdlog::info("wrote {}", path.string());
}

// Applies "id=kind,id=kind" (or "*=kind") to the commodities.
void apply_predictor_overrides(dpe::Scenario& sc, const std::string& spec) {
  if (spec.empty()) return;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw dpe::ValidationError("predictor override '" + item + "' is not of the form id=kind");
    const std::string id = item.substr(0, eq);
    const auto kind = dpe::parse_predictor_kind(item.substr(eq + 1));
    bool matched = false;
    for (auto& c : sc.commodities) {
      if (id == "*" || c.id == id) {
        c.predictor = kind;
        matched = true;
      }
    }
    if (!matched) throw dpe::ValidationError("predictor override names unknown commodity '" + id + "'");
  }
}

dpe::Scenario load(const CommonOptions& opt) {
  if (opt.scenario.empty()) throw dpe::ValidationError("--scenario is required");
  const fs::path path(opt.scenario);
  if (!fs::exists(path)) throw dpe::ValidationError("scenario file does not exist: " + path.string());
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& ex) {
    throw dpe::ParseError(path.string() + ": " + ex.what());
  }
  if (opt.seed && doc.contains("commodity_generation")) doc["commodity_generation"]["seed"] = *opt.seed;
  dpe::Scenario sc = dpe::parse_scenario(doc.dump(), path.parent_path());
  if (opt.epsilon) sc.simulation.prediction_step = *opt.epsilon;
  if (opt.horizon) sc.simulation.horizon = *opt.horizon;
  if (!opt.model.empty()) sc.predictors.regression_model = fs::absolute(opt.model).string();
  apply_predictor_overrides(sc, opt.predictor_overrides);
  sc.validate();
  return sc;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_scenario = true) {
  auto* s = cmd->add_option("--scenario", opt.scenario, "Scenario file (dpe-scenario/1)");
  if (needs_scenario) s->required();
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_option("--epsilon", opt.epsilon, "Prediction step override")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", opt.horizon, "Horizon override")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opt.seed, "Seed for commodity generation and data splits");
  cmd->add_option("--predictor-overrides", opt.predictor_overrides, "Comma separated id=kind (id '*' for all)");
  cmd->add_option("--model", opt.model, "Regression model file override");
  cmd->add_option("--format", opt.format, "Metrics format")->check(CLI::IsMember({"csv", "json"}));
}

// ---------------------------------------------------------------------------

int cmd_run(const CommonOptions& opt, bool dump_flow) {
  const dpe::Scenario sc = load(opt);
  dpe::RunOptions run_opts;
  run_opts.model = dpe::load_scenario_model(sc);
  const auto start = std::chrono::steady_clock::now();
  const auto result = dpe::run(sc, run_opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("simulated {} commodities on {} edges in {:.3f}s ({} phases)", sc.commodities.size(),
               sc.network.edge_count(), secs, result.phases);
  const fs::path out(opt.out);
  if (opt.format == "json") {
    write_text(out / "metrics.json", dpe::metrics_json(result.metrics) + "\n");
  } else {
    write_text(out / "metrics.csv", dpe::metrics_csv(result.metrics));
  }
  write_text(out / "events.csv", dpe::format_events(result.events, *result.network, result.commodities));
  if (dump_flow) write_text(out / "flow.json", dpe::dump_flow(result) + "\n");
  std::cout << dpe::metrics_csv(result.metrics);
  return 0;
}

int cmd_sweep(const CommonOptions& opt, int points, double max_inflow) {
  const dpe::Scenario base = load(opt);
  dpe::RunOptions run_opts;
  run_opts.model = dpe::load_scenario_model(base);
  run_opts.record_events = false;
  std::ostringstream table;
  table << "total_inflow,commodity,predictor,avg_tt\n";
  json rows = json::array();
  for (const auto& row : dpe::sweep_total_inflow(base, points, max_inflow, run_opts)) {
    const auto& m = row.metrics;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", m.average_travel_time);
    table << row.total_inflow << ',' << m.id << ',' << dpe::to_string(m.predictor) << ',' << buf << '\n';
    rows.push_back({{"total_inflow", row.total_inflow},
                    {"commodity", m.id},
                    {"predictor", dpe::to_string(m.predictor)},
                    {"avg_tt", m.average_travel_time}});
  }
  const fs::path out(opt.out);
  if (opt.format == "json") {
    write_text(out / "sweep.json", rows.dump(1) + "\n");
  } else {
    write_text(out / "sweep.csv", table.str());
  }
  return 0;
}

struct TrainArgs {
  dpe::TraceGeneration generation;
  bool shared = false;
  std::string model_name = "model.json";
  dpe::TrainingOptions training;
};

int cmd_train(const CommonOptions& opt, TrainArgs args) {
  const dpe::Scenario base = load(opt);
  const std::uint64_t seed = opt.seed.value_or(1);
  args.generation.seed = seed;
  const auto traces = dpe::generate_training_traces(base, args.generation);
  args.training.per_edge = !args.shared;
  args.training.seed = seed;
  dpe::TrainingReport report;
  const auto model = dpe::train_regression(base.network, traces, args.training, &report);
  const fs::path out(opt.out);
  write_text(out / args.model_name, dpe::dump_model(model) + "\n");
  std::ostringstream r2;
  r2 << "edge,r2\n";
  for (dpe::EdgeId e = 0; e < base.network.edge_count(); ++e) {
    r2 << base.network.edge(e).id << ',';
    if (report.edge_r2[e]) {
      r2 << *report.edge_r2[e];
    } else {
      r2 << "degenerate";
    }
    r2 << '\n';
  }
  r2 << "overall,";
  if (report.overall_r2) {
    r2 << *report.overall_r2;
  } else {
    r2 << "degenerate";
  }
  r2 << '\n';
  write_text(out / (fs::path(args.model_name).stem().string() + "_r2.csv"), r2.str());
  if (report.ridge_fallback) spdlog::warn("feature matrix was rank deficient; solved with ridge regularization");
  std::cout << "train_samples=" << report.train_samples << " test_samples=" << report.test_samples
            << " overall_r2=" << (report.overall_r2 ? std::to_string(*report.overall_r2) : "degenerate") << '\n';
  return 0;
}

int cmd_demo(const CommonOptions& opt) {
  const double eps = opt.epsilon.value_or(0.25);
  const double horizon = opt.horizon.value_or(20.0);
  const auto rep = dpe::run_counterexample_demo(eps, horizon);
  write_text(fs::path(opt.out) / "events.csv",
             dpe::format_events(rep.result.events, *rep.result.network, rep.result.commodities));
  std::cout << "e2_inflow_before_1=" << rep.e2_inflow_before_1 << '\n'
            << "e1_queue_at_1=" << rep.e1_queue_at_1 << '\n'
            << "flips_after_1=" << rep.flips << " of " << rep.prediction_steps_after_1 << " prediction steps\n";
  return 0;
}

int cmd_generate(const CommonOptions& opt, dpe::CommodityGeneration gen, const std::string& predictor,
                 const std::string& output) {
  dpe::Scenario sc = load(opt);
  gen.seed = opt.seed.value_or(gen.seed);
  gen.predictor = dpe::parse_predictor_kind(predictor);
  gen.until = sc.simulation.inflow_cutoff;
  auto generated = dpe::generate_commodities(sc.network, gen);
  sc.commodities.insert(sc.commodities.end(), generated.begin(), generated.end());
  sc.validate();
  const std::string text = dpe::dump_scenario(sc);
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    write_text(output, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Dynamic prediction equilibria in the Vickrey point-queue model"};
  app.require_subcommand(1);

  CommonOptions opt;
  bool dump_flow = false;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write metrics and events");
  add_common(run, opt);
  run->add_flag("--dump-flow", dump_flow, "Also write the full flow (dpe-flow/1)");

  int points = 30;
  double max_inflow = 30.0;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario over a grid of total inflow rates");
  add_common(sweep, opt);
  sweep->add_option("--points", points, "Grid points in (0, max-inflow)")->check(CLI::PositiveNumber);
  sweep->add_option("--max-inflow", max_inflow, "Upper end of the total inflow grid")->check(CLI::PositiveNumber);

  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train a regression predictor from constant-predictor runs");
  add_common(train, opt);
  train->add_option("--runs", targs.generation.runs, "Number of training simulations")->check(CLI::PositiveNumber);
  train->add_option("--min-inflow", targs.generation.min_inflow, "Smallest sampled total inflow");
  train->add_option("--max-inflow", targs.generation.max_inflow, "Largest sampled total inflow");
  train->add_option("--random-commodities", targs.generation.random_commodities,
                    "Draw this many random commodities per run instead of scaling the scenario's");
  train->add_option("--capacity-factor", targs.generation.capacity_factor, "Inflow rate factor for random commodities");
  train->add_flag("--shared", targs.shared, "One model for all edges instead of one per edge");
  train->add_option("--sample-count", targs.training.sample_count, "Past samples k");
  train->add_option("--sample-step", targs.training.sample_step, "Sample spacing");
  train->add_option("--future-steps", targs.training.future_steps, "Predicted points");
  train->add_option("--model-name", targs.model_name, "File name of the model inside --out");

  auto* demo = app.add_subcommand("demo-counterexample", "Two-edge instance with a non-continuous predictor");
  add_common(demo, opt, false);

  dpe::CommodityGeneration gen;
  std::string gen_predictor = "constant";
  std::string gen_output;
  auto* generate = app.add_subcommand("generate-commodities", "Add seeded random commodities to a scenario");
  add_common(generate, opt);
  generate->add_option("--count", gen.count, "Number of commodities")->check(CLI::PositiveNumber);
  generate->add_option("--capacity-factor", gen.capacity_factor, "Rate as a fraction of source out-capacity");
  generate->add_option("--predictor", gen_predictor, "Predictor of the generated commodities");
  generate->add_option("--id-prefix", gen.id_prefix, "Commodity id prefix");
  generate->add_option("--output", gen_output, "Scenario file to write ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (run->parsed()) return cmd_run(opt, dump_flow);
    if (sweep->parsed()) return cmd_sweep(opt, points, max_inflow);
    if (train->parsed()) return cmd_train(opt, targs);
    if (demo->parsed()) return cmd_demo(opt);
    if (generate->parsed()) return cmd_generate(opt, gen, gen_predictor, gen_output);
  } catch (const dpe::ValidationError& ex) {
    spdlog::error("{}", ex.what());
    return kExitValidation;
  } catch (const dpe::ParseError& ex) {
    spdlog::error("{}", ex.what());
    return kExitValidation;
  } catch (const dpe::SimulationError& ex) {
    spdlog::error("simulation aborted: {}", ex.what());
    return kExitRuntime;
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return kExitRuntime;
  }
  return 0;
}
