#pragma once

// Config-driven comparison runs: load or synthesize a task, produce f^I,
// run the requested refinement methods with validation-tuned
// hyperparameters, and score everything on held-out test pairs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tupi/baselines.hpp"
#include "tupi/denoiser.hpp"
#include "tupi/synthetic.hpp"
#include "tupi/types.hpp"

namespace tupi {

struct MethodGrids {
  std::vector<double> tupi_lambda = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> tupi_sigma_w_sq = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> coconut_lambda = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<int> coconut_k = {5, 10, 20};
  std::vector<double> ssl_lambda = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<int> ssl_k = {5, 10, 20};
  std::vector<double> ranker_reg = {1e-3, 1e-2, 1e-1, 1.0, 10.0};

  std::vector<GridCell> tupi_cells() const;
};

/// File inputs. `initial` gives f^I directly; otherwise a linear ranker is
/// trained on `base` with `train` pairs.
struct ExperimentInputs {
  std::vector<std::filesystem::path> features;
  std::filesystem::path validation;
  std::filesystem::path test;
  std::optional<std::filesystem::path> initial;
  std::optional<std::filesystem::path> base;
  std::optional<std::filesystem::path> train;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {"tupi", "coconut",   "ssl",
                                                 "combined1", "combined2", "retrain"};
  return names;
}

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::optional<SyntheticSpec> spec;
  std::optional<ExperimentInputs> inputs;
  std::vector<std::string> methods;
  MethodGrids grids;
  std::filesystem::path output_dir;
  int rank = 50;
  int max_iters = 50;
  unsigned threads = 0;

  /// Throws InvalidInput on unknown methods or missing data source.
  void validate() const;
};

/// Parses the JSON config; relative paths resolve against `base_dir`.
/// Throws ParseError on malformed JSON or wrong field types.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir = {});

struct ExperimentData {
  std::vector<FeatureSet> features;
  Predictions initial;
  RankPairs validation;
  RankPairs test;  // may be empty outside full experiments
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

struct MethodResult {
  std::string name;
  double test_accuracy = 0.0;
  double validation_accuracy = 0.0;
  std::vector<std::pair<std::string, double>> config_chosen;
  int iterations = 0;
  double wall_time = 0.0;  // seconds
  Predictions predictions;
};

/// Validation-tuned runs of each method over one data set. The tupi and
/// coconut results are cached so the combinations reuse them.
class MethodRunner {
 public:
  MethodRunner(const ExperimentData& data, const ExperimentConfig& config);

  MethodResult tupi();
  MethodResult coconut();
  MethodResult ssl();
  MethodResult combined1();
  MethodResult combined2();
  MethodResult retrain();
  MethodResult run(const std::string& name);

 private:
  const NeighborGraph& graph(int k);
  std::shared_ptr<const FeatureBank> bank();
  MethodResult finish(std::string name, Predictions p) const;

  const ExperimentData& data_;
  const ExperimentConfig& config_;
  FeatureSet joined_;
  std::shared_ptr<const FeatureBank> bank_;
  std::map<int, NeighborGraph> graphs_;
  std::optional<MethodResult> tupi_;
  std::optional<MethodResult> coconut_;
  DenoiseConfig tupi_config_;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::string spec_json;  // echo of the data source
  double initial_test_accuracy = 0.0;
  double initial_validation_accuracy = 0.0;
  Predictions initial;
  std::vector<MethodResult> methods;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Deterministic JSON; timing fields are omitted when `with_timing` is false.
std::string report_to_json(const ExperimentReport& report, bool with_timing = true);

/// Human-readable summary of a report JSON document.
std::string format_report(const std::string& report_json);

/// Writes report.json and one predictions CSV per method under `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

std::string synthetic_spec_json(const SyntheticSpec& spec);

}  // namespace tupi
