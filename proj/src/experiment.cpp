#include "tupi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "tupi/error.hpp"
#include "tupi/io.hpp"
#include "tupi/ranking.hpp"

namespace tupi {
namespace {

using json = nlohmann::ordered_json;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config field '") + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

SyntheticSpec parse_spec(const json& j, std::uint64_t seed) {
  if (!j.is_object()) throw ParseError("config field 'spec' must be an object");
  SyntheticSpec s;
  s.seed = seed;
  read_field(j, "n", s.n);
  read_field(j, "d_base", s.d_base);
  read_field(j, "noise_level", s.noise_level);
  read_field(j, "gt_feature_noise", s.gt_feature_noise);
  read_field(j, "distractors", s.distractors);
  read_field(j, "distractor_min_dim", s.distractor_min_dim);
  read_field(j, "distractor_max_dim", s.distractor_max_dim);
  read_field(j, "fi_copies", s.fi_copies);
  read_field(j, "train_pairs", s.train_pairs);
  read_field(j, "validation_pairs", s.validation_pairs);
  read_field(j, "test_pairs", s.test_pairs);
  read_field(j, "ranker_regs", s.ranker_regs);
  read_field(j, "seed", s.seed);
  return s;
}

ExperimentInputs parse_inputs(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ParseError("config field 'inputs' must be an object");
  ExperimentInputs in;
  std::vector<std::string> features;
  std::string s;
  read_field(j, "features", features);
  for (const auto& f : features) in.features.push_back(resolve(base, f));
  if (!j.contains("validation") || !j.contains("test")) {
    throw ParseError("config 'inputs' needs 'validation' and 'test'");
  }
  read_field(j, "validation", s);
  in.validation = resolve(base, s);
  read_field(j, "test", s);
  in.test = resolve(base, s);
  for (const char* key : {"initial", "base", "train"}) {
    if (!j.contains(key)) continue;
    read_field(j, key, s);
    const auto p = resolve(base, s);
    if (std::string(key) == "initial") in.initial = p;
    if (std::string(key) == "base") in.base = p;
    if (std::string(key) == "train") in.train = p;
  }
  return in;
}

json spec_to_json(const SyntheticSpec& s) {
  return json{{"n", s.n},
              {"d_base", s.d_base},
              {"noise_level", s.noise_level},
              {"gt_feature_noise", s.gt_feature_noise},
              {"distractors", s.distractors},
              {"distractor_min_dim", s.distractor_min_dim},
              {"distractor_max_dim", s.distractor_max_dim},
              {"fi_copies", s.fi_copies},
              {"train_pairs", s.train_pairs},
              {"validation_pairs", s.validation_pairs},
              {"test_pairs", s.test_pairs},
              {"ranker_regs", s.ranker_regs},
              {"seed", s.seed}};
}

json inputs_to_json(const ExperimentInputs& in) {
  json j;
  std::vector<std::string> f;
  for (const auto& p : in.features) f.push_back(p.generic_string());
  j["features"] = f;
  j["validation"] = in.validation.generic_string();
  j["test"] = in.test.generic_string();
  if (in.initial) j["initial"] = in.initial->generic_string();
  if (in.base) j["base"] = in.base->generic_string();
  if (in.train) j["train"] = in.train->generic_string();
  return j;
}

json predictions_json(const Predictions& p) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) arr.push_back(p(i));
  return arr;
}

}  // namespace

std::vector<GridCell> MethodGrids::tupi_cells() const {
  std::vector<GridCell> cells;
  for (double l : tupi_lambda) {
    for (double s : tupi_sigma_w_sq) cells.push_back({l, s});
  }
  return cells;
}

void ExperimentConfig::validate() const {
  if (spec.has_value() == inputs.has_value()) {
    throw InvalidInput("experiment config needs exactly one of 'spec' or 'inputs'");
  }
  if (spec) spec->validate();
  if (inputs) {
    if (inputs->features.empty()) throw InvalidInput("experiment inputs: no feature files");
    if (!inputs->initial && !(inputs->base && inputs->train)) {
      throw InvalidInput("experiment inputs: give 'initial', or 'base' with 'train'");
    }
  }
  for (const auto& m : methods) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw InvalidInput("unknown method '" + m + "'");
    }
  }
  if (rank < 2) throw InvalidInput("rank must be at least 2");
  if (max_iters < 0 || max_iters > 1000) throw InvalidInput("max_iters must lie in [0, 1000]");
  if (grids.tupi_lambda.empty() || grids.tupi_sigma_w_sq.empty() ||
      grids.coconut_lambda.empty() || grids.coconut_k.empty() || grids.ssl_lambda.empty() ||
      grids.ssl_k.empty() || grids.ranker_reg.empty()) {
    throw InvalidInput("every grid must be nonempty");
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object");

  ExperimentConfig c;
  read_field(j, "seed", c.seed);
  if (j.contains("spec")) c.spec = parse_spec(j.at("spec"), c.seed);
  if (j.contains("inputs")) c.inputs = parse_inputs(j.at("inputs"), base_dir);
  read_field(j, "methods", c.methods);
  read_field(j, "rank", c.rank);
  read_field(j, "max_iters", c.max_iters);
  read_field(j, "threads", c.threads);
  std::string out;
  read_field(j, "output_dir", out);
  if (!out.empty()) c.output_dir = resolve(base_dir, out);
  if (j.contains("grids")) {
    const json& g = j.at("grids");
    if (!g.is_object()) throw ParseError("config field 'grids' must be an object");
    read_field(g, "tupi_lambda", c.grids.tupi_lambda);
    read_field(g, "tupi_sigma_w_sq", c.grids.tupi_sigma_w_sq);
    read_field(g, "coconut_lambda", c.grids.coconut_lambda);
    read_field(g, "coconut_k", c.grids.coconut_k);
    read_field(g, "ssl_lambda", c.grids.ssl_lambda);
    read_field(g, "ssl_k", c.grids.ssl_k);
    read_field(g, "ranker_reg", c.grids.ranker_reg);
  }
  return c;
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  config.validate();
  ExperimentData d;
  if (config.spec) {
    SyntheticTask task = generate_synthetic(*config.spec);
    d.features = std::move(task.features);
    d.initial = std::move(task.initial);
    d.validation = std::move(task.validation);
    d.test = std::move(task.test);
    return d;
  }
  const ExperimentInputs& in = *config.inputs;
  for (const auto& p : in.features) d.features.push_back(ingest_features(p));
  const auto n = static_cast<std::size_t>(d.features.front().rows());
  for (const auto& f : d.features) {
    if (static_cast<std::size_t>(f.rows()) != n) {
      throw InvalidInput("feature file '" + f.name + "' has a different row count");
    }
  }
  d.validation = ingest_pairs(in.validation, n);
  d.test = ingest_pairs(in.test, n);
  if (in.initial) {
    d.initial = ingest_predictions(*in.initial);
    if (static_cast<std::size_t>(d.initial.size()) != n) {
      throw InvalidInput("initial predictions length does not match the features");
    }
  } else {
    const FeatureSet base = ingest_features(*in.base);
    if (static_cast<std::size_t>(base.rows()) != n) {
      throw InvalidInput("base features row count does not match the features");
    }
    const RankPairs train = ingest_pairs(*in.train, n);
    d.initial = select_linear_ranker(base, train, d.validation, config.grids.ranker_reg)
                    .score(base.values);
  }
  return d;
}

MethodRunner::MethodRunner(const ExperimentData& data, const ExperimentConfig& config)
    : data_(data), config_(config), joined_(concatenate(data.features)) {
  tupi_config_.rank = config.rank;
  tupi_config_.max_iters = config.max_iters;
}

std::shared_ptr<const FeatureBank> MethodRunner::bank() {
  if (!bank_) {
    bank_ = std::make_shared<const FeatureBank>(data_.features, tupi_config_.path,
                                                tupi_config_.rank);
  }
  return bank_;
}

const NeighborGraph& MethodRunner::graph(int k) {
  auto it = graphs_.find(k);
  if (it == graphs_.end()) it = graphs_.emplace(k, knn_laplacian(joined_, k)).first;
  return it->second;
}

MethodResult MethodRunner::finish(std::string name, Predictions p) const {
  MethodResult r;
  r.name = std::move(name);
  if (!data_.test.empty()) r.test_accuracy = rank_accuracy(p, data_.test);
  r.validation_accuracy = rank_accuracy(p, data_.validation);
  r.predictions = std::move(p);
  return r;
}

MethodResult MethodRunner::tupi() {
  if (tupi_) return *tupi_;
  Stopwatch clock;
  const auto cells = config_.grids.tupi_cells();
  TuneResult t = tune(data_.initial, bank(), data_.validation, cells, tupi_config_,
                      config_.threads);
  tupi_config_ = t.config;
  MethodResult r = finish("tupi", std::move(t.report.final));
  r.config_chosen = {{"lambda", t.config.lambda}, {"sigma_w_sq", t.config.sigma_w_sq}};
  r.iterations = t.report.iterations_run;
  r.wall_time = clock.seconds();
  tupi_ = r;
  return r;
}

MethodResult MethodRunner::coconut() {
  if (coconut_) return *coconut_;
  Stopwatch clock;
  std::vector<Candidate> candidates;
  std::vector<std::pair<double, int>> settings;
  const auto n = data_.initial.size();
  for (int k : config_.grids.coconut_k) {
    if (k < 1 || k >= n) continue;
    for (double l : config_.grids.coconut_lambda) {
      candidates.push_back({"", coconut_refine(data_.initial, graph(k), {l, k})});
      settings.emplace_back(l, k);
    }
  }
  if (candidates.empty()) throw InvalidInput("coconut: no neighbor count below n");
  const Candidate& best = select_by_validation(candidates, data_.validation);
  const auto idx = static_cast<std::size_t>(&best - candidates.data());
  MethodResult r = finish("coconut", best.predictions);
  r.config_chosen = {{"lambda_c", settings[idx].first},
                     {"k_c", static_cast<double>(settings[idx].second)}};
  r.wall_time = clock.seconds();
  coconut_ = r;
  return r;
}

MethodResult MethodRunner::ssl() {
  Stopwatch clock;
  std::vector<Candidate> candidates;
  std::vector<std::pair<double, int>> settings;
  const auto n = data_.initial.size();
  for (int k : config_.grids.ssl_k) {
    if (k < 1 || k >= n) continue;
    for (double l : config_.grids.ssl_lambda) {
      candidates.push_back({"", ssl_laplacian_rank(graph(k), data_.validation, l)});
      settings.emplace_back(l, k);
    }
  }
  if (candidates.empty()) throw InvalidInput("ssl: no neighbor count below n");
  const Candidate& best = select_by_validation(candidates, data_.validation);
  const auto idx = static_cast<std::size_t>(&best - candidates.data());
  MethodResult r = finish("ssl", best.predictions);
  r.config_chosen = {{"lambda_ssl", settings[idx].first},
                     {"k", static_cast<double>(settings[idx].second)}};
  r.wall_time = clock.seconds();
  return r;
}

MethodResult MethodRunner::combined1() {
  const MethodResult base = tupi();
  Stopwatch clock;
  // Denoiser hyperparameters stay at the tupi choice; only the smoothness
  // term is tuned.
  const GridCell cell{tupi_config_.lambda, tupi_config_.sigma_w_sq};
  std::vector<Candidate> candidates;
  std::vector<std::pair<double, int>> settings;
  std::vector<int> iterations;
  const auto n = data_.initial.size();
  for (int k : config_.grids.coconut_k) {
    if (k < 1 || k >= n) continue;
    for (double l : config_.grids.coconut_lambda) {
      const Penalty penalty = laplacian_penalty(graph(k), {l, k});
      TuneResult t = tune(data_.initial, bank(), data_.validation, std::span(&cell, 1),
                          tupi_config_, 1, penalty);
      candidates.push_back({"", std::move(t.report.final)});
      settings.emplace_back(l, k);
      iterations.push_back(t.report.iterations_run);
    }
  }
  if (candidates.empty()) throw InvalidInput("combined1: no neighbor count below n");
  const Candidate& best = select_by_validation(candidates, data_.validation);
  const auto idx = static_cast<std::size_t>(&best - candidates.data());
  MethodResult r = finish("combined1", best.predictions);
  r.config_chosen = {{"lambda", cell.lambda},
                     {"sigma_w_sq", cell.sigma_w_sq},
                     {"lambda_c", settings[idx].first},
                     {"k_c", static_cast<double>(settings[idx].second)}};
  r.iterations = iterations[idx];
  r.wall_time = clock.seconds() + base.wall_time;
  return r;
}

MethodResult MethodRunner::combined2() {
  const MethodResult a = tupi();
  const MethodResult b = coconut();
  const std::vector<Candidate> candidates = {{"tupi", a.predictions},
                                             {"coconut", b.predictions}};
  const Candidate& best = select_by_validation(candidates, data_.validation);
  const MethodResult& chosen = best.name == "tupi" ? a : b;
  MethodResult r = finish("combined2", best.predictions);
  r.config_chosen = chosen.config_chosen;
  r.config_chosen.emplace_back("selected_tupi", best.name == "tupi" ? 1.0 : 0.0);
  r.iterations = chosen.iterations;
  r.wall_time = a.wall_time + b.wall_time;
  return r;
}

MethodResult MethodRunner::retrain() {
  Stopwatch clock;
  const LinearRanker ranker =
      select_linear_ranker(joined_, data_.validation, data_.validation, config_.grids.ranker_reg);
  MethodResult r = finish("retrain", ranker.score(joined_.values));
  r.config_chosen = {{"reg", ranker.reg}};
  r.wall_time = clock.seconds();
  return r;
}

MethodResult MethodRunner::run(const std::string& name) {
  if (name == "tupi") return tupi();
  if (name == "coconut") return coconut();
  if (name == "ssl") return ssl();
  if (name == "combined1") return combined1();
  if (name == "combined2") return combined2();
  if (name == "retrain") return retrain();
  throw InvalidInput("unknown method '" + name + "'");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const ExperimentData data = load_experiment_data(config);
  ExperimentReport report;
  report.seed = config.seed;
  report.spec_json = config.spec ? spec_to_json(*config.spec).dump()
                                 : inputs_to_json(*config.inputs).dump();
  report.initial = data.initial;
  report.initial_test_accuracy = rank_accuracy(data.initial, data.test);
  report.initial_validation_accuracy = rank_accuracy(data.initial, data.validation);
  MethodRunner runner(data, config);
  for (const auto& m : config.methods) report.methods.push_back(runner.run(m));
  return report;
}

std::string synthetic_spec_json(const SyntheticSpec& spec) { return spec_to_json(spec).dump(); }

std::string report_to_json(const ExperimentReport& report, bool with_timing) {
  json j;
  j["seed"] = report.seed;
  j["source"] = json::parse(report.spec_json);
  j["initial"] = json{{"test_accuracy", report.initial_test_accuracy},
                      {"validation_accuracy", report.initial_validation_accuracy},
                      {"predictions", predictions_json(report.initial)}};
  json methods = json::object();
  for (const auto& m : report.methods) {
    json chosen = json::object();
    for (const auto& [k, v] : m.config_chosen) chosen[k] = v;
    json entry{{"test_accuracy", m.test_accuracy},
               {"validation_accuracy", m.validation_accuracy},
               {"config_chosen", chosen},
               {"iterations", m.iterations}};
    if (with_timing) entry["wall_time"] = m.wall_time;
    entry["predictions"] = predictions_json(m.predictions);
    methods[m.name] = std::move(entry);
  }
  j["methods"] = std::move(methods);
  return j.dump(2) + "\n";
}

std::string format_report(const std::string& report_json) {
  json j;
  try {
    j = json::parse(report_json);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  auto pct = [](const json& v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * v.get<double>());
    return std::string(buf);
  };
  std::ostringstream out;
  try {
    out << "seed " << j.at("seed").get<std::uint64_t>() << "\n";
    out << "method        test%   valid%  iters  config\n";
    const json& init = j.at("initial");
    out << "initial      " << pct(init.at("test_accuracy")) << "  "
        << pct(init.at("validation_accuracy")) << "\n";
    for (const auto& [name, m] : j.at("methods").items()) {
      std::string padded = name;
      padded.resize(std::max<std::size_t>(padded.size(), 12), ' ');
      out << padded << " " << pct(m.at("test_accuracy")) << "  "
          << pct(m.at("validation_accuracy")) << "  ";
      char iters[16];
      std::snprintf(iters, sizeof iters, "%5d", m.at("iterations").get<int>());
      out << iters << "  ";
      bool first = true;
      for (const auto& [k, v] : m.at("config_chosen").items()) {
        out << (first ? "" : " ") << k << "=" << v.dump();
        first = false;
      }
      out << "\n";
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return out.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  write_text(dir / "report.json", report_to_json(report));
  write_predictions(dir / "initial.csv", report.initial);
  for (const auto& m : report.methods) write_predictions(dir / (m.name + ".csv"), m.predictions);
}

}  // namespace tupi
