#include "dpe/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "dpe/errors.hpp"

namespace dpe {

using nlohmann::json;

std::vector<EdgeId> neighborhood(const Network& network, EdgeId e, std::size_t slots) {
  if (slots == 0) throw PreconditionError("neighborhood: at least one slot required");
  std::vector<EdgeId> out{e};
  std::vector<EdgeId> in = network.incoming(network.edge(e).tail);
  std::sort(in.begin(), in.end());
  for (EdgeId f : in) {
    if (out.size() >= slots) break;
    out.push_back(f);
  }
  out.resize(slots, kNoEdge);
  return out;
}

void RegressionModel::check(const Network& network) const {
  if (sample_count <= 0 || future_steps <= 0 || slots == 0 || !(sample_step > 0.0)) {
    throw PreconditionError("regression model: sample_count, future_steps, slots and sample_step must be positive");
  }
  if (per_edge && coefficients.size() != network.edge_count()) {
    throw PreconditionError("regression model: per-edge model has " + std::to_string(coefficients.size()) +
                            " blocks but the network has " + std::to_string(network.edge_count()) + " edges");
  }
  if (!per_edge && coefficients.size() != 1) throw PreconditionError("regression model: shared model needs one block");
  for (const auto& block : coefficients) {
    if (block.size() != block_size()) throw PreconditionError("regression model: coefficient block size mismatch");
    for (double a : block) {
      if (!std::isfinite(a)) throw PreconditionError("regression model: non-finite coefficient");
    }
  }
}

FitResult fit_least_squares(const RegressionSamples& samples, std::size_t feature_count, std::size_t label_count,
                            double ridge) {
  const auto rows = static_cast<Eigen::Index>(samples.features.size());
  const auto p = static_cast<Eigen::Index>(feature_count);
  const auto m = static_cast<Eigen::Index>(label_count);
  Eigen::MatrixXd x(rows, p);
  Eigen::MatrixXd y(rows, m);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) x(r, c) = samples.features[r][c];
    for (Eigen::Index c = 0; c < m; ++c) y(r, c) = samples.labels[r][c];
  }
  // Columns are scaled to unit max-norm so queue magnitudes do not spoil the rank test.
  Eigen::VectorXd col_scale(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const double s = rows > 0 ? x.col(c).cwiseAbs().maxCoeff() : 0.0;
    col_scale(c) = s > 0.0 ? s : 1.0;
    x.col(c) /= col_scale(c);
  }
  FitResult result;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  cod.setThreshold(1e-10);
  result.ridge_fallback = rows < p || cod.rank() < p;
  Eigen::MatrixXd a;
  if (result.ridge_fallback) {
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += ridge;
    a = gram.ldlt().solve(x.transpose() * y);
  } else {
    a = cod.solve(y);
  }
  for (Eigen::Index c = 0; c < p; ++c) a.row(c) /= col_scale(c);
  result.coefficients.resize(static_cast<std::size_t>(p * m));
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index c = 0; c < p; ++c) result.coefficients[static_cast<std::size_t>(j * p + c)] = a(c, j);
  }
  return result;
}

std::optional<double> r_squared(const RegressionSamples& samples, std::span<const double> coefficients,
                                std::size_t label_count) {
  if (samples.features.empty()) return std::nullopt;
  const std::size_t p = samples.features.front().size();
  double mean = 0.0;
  std::size_t count = 0;
  for (const auto& row : samples.labels) {
    for (double v : row) mean += v;
    count += row.size();
  }
  mean /= static_cast<double>(count);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t r = 0; r < samples.features.size(); ++r) {
    for (std::size_t j = 0; j < label_count; ++j) {
      double pred = 0.0;
      for (std::size_t c = 0; c < p; ++c) pred += coefficients[j * p + c] * samples.features[r][c];
      const double y = samples.labels[r][j];
      ss_res += (y - pred) * (y - pred);
      ss_tot += (y - mean) * (y - mean);
    }
  }
  if (ss_tot <= 1e-12 * std::max(1.0, static_cast<double>(count) * mean * mean)) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

RegressionSamples extract_samples(const Network& network, const QueueTrace& trace, EdgeId e,
                                  const TrainingOptions& options) {
  RegressionSamples out;
  const auto nbhd = neighborhood(network, e, options.slots);
  const double step = options.sample_step;
  auto q_at = [&](EdgeId f, double t) { return trace.queues[f].eval(std::max(t, 0.0)); };
  for (std::size_t n = 0;; ++n) {
    const double tbar = options.min_prediction_time + static_cast<double>(n) * step;
    if (tbar + options.future_steps * step > trace.horizon + kNumericTolerance) break;
    std::vector<double> x(static_cast<std::size_t>(options.sample_count) * options.slots, 0.0);
    for (int i = 1; i <= options.sample_count; ++i) {
      for (std::size_t s = 0; s < options.slots; ++s) {
        if (nbhd[s] != kNoEdge) x[static_cast<std::size_t>(i - 1) * options.slots + s] = q_at(nbhd[s], tbar - i * step);
      }
    }
    std::vector<double> y(static_cast<std::size_t>(options.future_steps));
    for (int j = 1; j <= options.future_steps; ++j) y[static_cast<std::size_t>(j - 1)] = q_at(e, tbar + j * step);
    out.features.push_back(std::move(x));
    out.labels.push_back(std::move(y));
  }
  return out;
}

namespace {

struct Split {
  RegressionSamples train;
  RegressionSamples test;
};

void append_rows(RegressionSamples& into, const RegressionSamples& from, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    into.features.push_back(from.features[r]);
    into.labels.push_back(from.labels[r]);
  }
}

Split split_samples(const RegressionSamples& all, double test_fraction, std::mt19937_64& rng) {
  std::vector<std::size_t> order(all.features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(order.size())));
  Split split;
  append_rows(split.test, all, std::span(order).first(n_test));
  append_rows(split.train, all, std::span(order).subspan(n_test));
  return split;
}

void merge_into(RegressionSamples& into, RegressionSamples&& from) {
  std::move(from.features.begin(), from.features.end(), std::back_inserter(into.features));
  std::move(from.labels.begin(), from.labels.end(), std::back_inserter(into.labels));
}

}  // namespace

RegressionModel train_regression(const Network& network, std::span<const QueueTrace> traces,
                                 const TrainingOptions& options, TrainingReport* report) {
  if (options.sample_count <= 0 || options.future_steps <= 0 || options.slots == 0 || !(options.sample_step > 0.0)) {
    throw PreconditionError("train_regression: sample_count, future_steps, slots and sample_step must be positive");
  }
  if (options.test_fraction < 0.0 || options.test_fraction >= 1.0) {
    throw PreconditionError("train_regression: test_fraction must lie in [0, 1)");
  }
  for (const auto& tr : traces) {
    if (tr.queues.size() != network.edge_count()) throw PreconditionError("train_regression: trace/network size mismatch");
  }

  RegressionModel model;
  model.sample_count = options.sample_count;
  model.sample_step = options.sample_step;
  model.future_steps = options.future_steps;
  model.slots = options.slots;
  model.per_edge = options.per_edge;
  model.edge_count = network.edge_count();
  model.seed = options.seed;

  const std::size_t p = model.features();
  const auto m = static_cast<std::size_t>(model.future_steps);
  std::mt19937_64 rng(options.seed);
  TrainingReport rep;
  rep.edge_r2.assign(network.edge_count(), std::nullopt);

  std::vector<Split> per_edge(network.edge_count());
  for (EdgeId e = 0; e < network.edge_count(); ++e) {
    RegressionSamples all;
    for (const auto& tr : traces) merge_into(all, extract_samples(network, tr, e, options));
    per_edge[e] = split_samples(all, options.test_fraction, rng);
    rep.train_samples += per_edge[e].train.features.size();
    rep.test_samples += per_edge[e].test.features.size();
  }
  if (rep.train_samples == 0) throw PreconditionError("train_regression: traces too short for a single sample");

  RegressionSamples all_test;
  if (options.per_edge) {
    for (EdgeId e = 0; e < network.edge_count(); ++e) {
      const auto& sp = per_edge[e];
      FitResult fit = sp.train.features.empty() ? FitResult{std::vector<double>(p * m, 0.0), true}
                                                : fit_least_squares(sp.train, p, m, options.ridge);
      rep.ridge_fallback = rep.ridge_fallback || fit.ridge_fallback;
      rep.edge_r2[e] = r_squared(sp.test.features.empty() ? sp.train : sp.test, fit.coefficients, m);
      model.coefficients.push_back(std::move(fit.coefficients));
    }
    // Overall R^2 pools every edge's predictions against the pooled mean.
    double mean = 0.0;
    std::size_t count = 0;
    std::vector<std::pair<double, double>> pairs;
    for (EdgeId e = 0; e < network.edge_count(); ++e) {
      const auto& eval_set = per_edge[e].test.features.empty() ? per_edge[e].train : per_edge[e].test;
      const auto& a = model.coefficients[e];
      for (std::size_t r = 0; r < eval_set.features.size(); ++r) {
        for (std::size_t j = 0; j < m; ++j) {
          double pred = 0.0;
          for (std::size_t c = 0; c < p; ++c) pred += a[j * p + c] * eval_set.features[r][c];
          pairs.emplace_back(eval_set.labels[r][j], pred);
          mean += eval_set.labels[r][j];
          ++count;
        }
      }
    }
    if (count > 0) {
      mean /= static_cast<double>(count);
      double ss_res = 0.0;
      double ss_tot = 0.0;
      for (auto [y, pred] : pairs) {
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean) * (y - mean);
      }
      if (ss_tot > 1e-12 * std::max(1.0, static_cast<double>(count) * mean * mean)) rep.overall_r2 = 1.0 - ss_res / ss_tot;
    }
  } else {
    RegressionSamples train;
    for (EdgeId e = 0; e < network.edge_count(); ++e) merge_into(train, RegressionSamples(per_edge[e].train));
    FitResult fit = fit_least_squares(train, p, m, options.ridge);
    rep.ridge_fallback = fit.ridge_fallback;
    for (EdgeId e = 0; e < network.edge_count(); ++e) {
      const auto& eval_set = per_edge[e].test.features.empty() ? per_edge[e].train : per_edge[e].test;
      rep.edge_r2[e] = r_squared(eval_set, fit.coefficients, m);
      for (std::size_t r = 0; r < eval_set.features.size(); ++r) {
        all_test.features.push_back(eval_set.features[r]);
        all_test.labels.push_back(eval_set.labels[r]);
      }
    }
    rep.overall_r2 = r_squared(all_test, fit.coefficients, m);
    model.coefficients.push_back(std::move(fit.coefficients));
  }

  model.edge_r2 = rep.edge_r2;
  model.overall_r2 = rep.overall_r2;
  model.ridge_fallback = rep.ridge_fallback;
  if (report != nullptr) *report = std::move(rep);
  return model;
}

// ---------------------------------------------------------------------------
// Model files

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string dump_model(const RegressionModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["sample_count"] = model.sample_count;
  j["sample_step"] = model.sample_step;
  j["future_steps"] = model.future_steps;
  j["slots"] = model.slots;
  j["per_edge"] = model.per_edge;
  j["edge_count"] = model.edge_count;
  j["coefficients"] = model.coefficients;
  json meta;
  meta["seed"] = model.seed;
  meta["overall_r2"] = optional_number(model.overall_r2);
  json r2 = json::array();
  for (const auto& v : model.edge_r2) r2.push_back(optional_number(v));
  meta["edge_r2"] = r2;
  meta["ridge_fallback"] = model.ridge_fallback;
  j["training"] = meta;
  return j.dump(1);
}

RegressionModel parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ParseError(std::string("model: invalid JSON: ") + ex.what());
  }
  try {
    if (j.value("format", std::string{}) != kModelFormat) {
      throw ParseError("model: expected format '" + std::string(kModelFormat) + "'");
    }
    RegressionModel m;
    m.sample_count = j.at("sample_count").get<int>();
    m.sample_step = j.at("sample_step").get<double>();
    m.future_steps = j.at("future_steps").get<int>();
    m.slots = j.at("slots").get<std::size_t>();
    m.per_edge = j.at("per_edge").get<bool>();
    m.edge_count = j.value("edge_count", std::size_t{0});
    m.coefficients = j.at("coefficients").get<std::vector<std::vector<double>>>();
    if (j.contains("training")) {
      const auto& t = j["training"];
      m.seed = t.value("seed", std::uint64_t{0});
      if (t.contains("overall_r2")) m.overall_r2 = read_optional(t["overall_r2"]);
      if (t.contains("edge_r2")) {
        for (const auto& v : t["edge_r2"]) m.edge_r2.push_back(read_optional(v));
      }
      m.ridge_fallback = t.value("ridge_fallback", false);
    }
    for (const auto& block : m.coefficients) {
      if (block.size() != m.block_size()) {
        throw ParseError("model: coefficient block has " + std::to_string(block.size()) + " entries, expected " +
                         std::to_string(m.block_size()));
      }
    }
    return m;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("model: ") + ex.what());
  }
}

void save_model(const RegressionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file '" + path.string() + "'");
  out << dump_model(model) << '\n';
}

RegressionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace dpe
