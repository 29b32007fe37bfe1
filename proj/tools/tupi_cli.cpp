// Command-line front end: synthetic data, single runs, grid tuning,
// baselines, full experiments and report printing.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tupi/baselines.hpp"
#include "tupi/denoiser.hpp"
#include "tupi/error.hpp"
#include "tupi/experiment.hpp"
#include "tupi/io.hpp"
#include "tupi/ranking.hpp"
#include "tupi/synthetic.hpp"

namespace fs = std::filesystem;
using namespace tupi;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::ParseError:
    case ErrorKind::IoError:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

struct FileArgs {
  std::string initial;
  std::vector<std::string> features;
  std::string validation;
  std::string test;
};

void add_file_args(CLI::App* cmd, FileArgs& a, bool need_validation = true) {
  cmd->add_option("--initial", a.initial, "initial predictions CSV (one value per line)")
      ->required();
  cmd->add_option("--features", a.features, "feature CSV files")->required();
  auto* v = cmd->add_option("--validation", a.validation, "validation pairs file");
  if (need_validation) v->required();
  cmd->add_option("--test", a.test, "test pairs file (optional, for scoring)");
}

ExperimentData load_files(const FileArgs& a) {
  ExperimentData d;
  d.initial = ingest_predictions(a.initial);
  for (const auto& f : a.features) {
    d.features.push_back(ingest_features(f));
    if (d.features.back().rows() != d.initial.size()) {
      throw InvalidInput("feature file " + f + " has " +
                         std::to_string(d.features.back().rows()) + " rows, predictions have " +
                         std::to_string(d.initial.size()));
    }
  }
  const auto n = static_cast<std::size_t>(d.initial.size());
  if (!a.validation.empty()) d.validation = ingest_pairs(a.validation, n);
  if (!a.test.empty()) d.test = ingest_pairs(a.test, n);
  return d;
}

void print_accuracy(const char* label, const Predictions& p, const ExperimentData& d) {
  std::printf("%s validation accuracy %.4f", label, rank_accuracy(p, d.validation));
  if (!d.test.empty()) std::printf(", test accuracy %.4f", rank_accuracy(p, d.test));
  std::printf("\n");
}

void write_synthetic(const SyntheticTask& task, const SyntheticSpec& spec, const fs::path& dir) {
  write_features(dir / "base.csv", task.base);
  for (const auto& f : task.features) write_features(dir / "features" / (f.name + ".csv"), f);
  write_predictions(dir / "target.csv", task.target);
  write_predictions(dir / "initial.csv", task.initial);
  write_pairs(dir / "train.csv", task.train);
  write_pairs(dir / "validation.csv", task.validation);
  write_pairs(dir / "test.csv", task.test);
  write_text(dir / "spec.json", synthetic_spec_json(spec) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time refinement of ranking predictions with auxiliary features"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int rank = 50;
  int max_iters = 50;
  std::string out;
  unsigned threads = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--rank", rank, "Nystroem rank K")->check(CLI::Range(2, 100000));
    cmd->add_option("--max-iters", max_iters, "maximum outer iterations")
        ->check(CLI::Range(0, 1000));
    cmd->add_option("--threads", threads, "worker threads for grid search (0 = all cores)");
  };

  // synth
  SyntheticSpec spec;
  auto* synth = app.add_subcommand("synth", "write a synthetic ranking task to a directory");
  add_common(synth);
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--n", spec.n, "instances");
  synth->add_option("--d-base", spec.d_base, "base view dimension");
  synth->add_option("--noise-level", spec.noise_level, "noise on the base view");
  synth->add_option("--gt-noise", spec.gt_feature_noise,
                    "noise std of each ground-truth feature, e.g. 1 0.2 0");
  synth->add_option("--distractors", spec.distractors, "random feature sets");
  synth->add_option("--fi-copies", spec.fi_copies, "copies of the initial predictions");
  synth->add_option("--train-pairs", spec.train_pairs);
  synth->add_option("--validation-pairs", spec.validation_pairs);
  synth->add_option("--test-pairs", spec.test_pairs);

  // denoise
  FileArgs files;
  DenoiseConfig dcfg;
  auto* denoise = app.add_subcommand("denoise", "refine predictions with one setting");
  add_common(denoise);
  add_file_args(denoise, files);
  denoise->add_option("--lambda", dcfg.lambda, "feature term weight");
  denoise->add_option("--sigma-w-sq", dcfg.sigma_w_sq, "feature weight temperature");
  denoise->add_option("--out", out, "refined predictions CSV")->required();

  // tune
  std::vector<double> lambda_grid = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> sigma_grid = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  auto* tune_cmd = app.add_subcommand("tune", "grid search over lambda and sigma_w^2");
  add_common(tune_cmd);
  add_file_args(tune_cmd, files);
  tune_cmd->add_option("--lambda-grid", lambda_grid);
  tune_cmd->add_option("--sigma-w-sq-grid", sigma_grid);
  tune_cmd->add_option("--out", out, "refined predictions CSV of the chosen cell");

  // baseline
  std::string method;
  auto* baseline = app.add_subcommand("baseline", "run a tuned comparison method");
  add_common(baseline);
  baseline->add_option("method", method, "coconut | ssl | combined1 | combined2")
      ->required()
      ->check(CLI::IsMember({"coconut", "ssl", "combined1", "combined2"}));
  add_file_args(baseline, files);
  baseline->add_option("--out", out, "refined predictions CSV");

  // experiment
  std::string config_path;
  auto* experiment = app.add_subcommand("experiment", "run a JSON-configured experiment");
  add_common(experiment);
  experiment->add_option("config", config_path, "config JSON")->required();
  experiment->add_option("--out", out, "output directory (overrides output_dir)");

  // report
  std::string report_path;
  auto* report = app.add_subcommand("report", "print a report.json summary");
  report->add_option("report", report_path, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) {
      spec.seed = seed;
      const SyntheticTask task = generate_synthetic(spec);
      write_synthetic(task, spec, out);
      std::printf("wrote %s: n=%d, %zu feature sets, initial test accuracy %.4f\n", out.c_str(),
                  spec.n, task.features.size(), rank_accuracy(task.initial, task.test));
    } else if (*denoise) {
      const ExperimentData d = load_files(files);
      dcfg.rank = rank;
      dcfg.max_iters = max_iters;
      const DenoiseReport r = run(d.initial, d.features, dcfg, d.validation);
      write_predictions(out, r.final);
      print_accuracy("initial", d.initial, d);
      print_accuracy("refined", r.final, d);
      std::printf("iterations run %d, best iteration %d\n", r.iterations_run, r.best_iteration);
    } else if (*tune_cmd) {
      const ExperimentData d = load_files(files);
      DenoiseConfig base;
      base.rank = rank;
      base.max_iters = max_iters;
      std::vector<GridCell> grid;
      for (double l : lambda_grid) {
        for (double s : sigma_grid) grid.push_back({l, s});
      }
      const TuneResult t = tune(d.initial, d.features, d.validation, grid, base, threads);
      std::printf("lambda %s sigma_w_sq %s validation accuracy %.4f\n",
                  format_double(t.config.lambda).c_str(),
                  format_double(t.config.sigma_w_sq).c_str(), t.validation_accuracy);
      if (!d.test.empty()) {
        std::printf("test accuracy %.4f\n", rank_accuracy(t.report.final, d.test));
      }
      if (!out.empty()) write_predictions(out, t.report.final);
    } else if (*baseline) {
      const ExperimentData d = load_files(files);
      ExperimentConfig cfg;
      cfg.rank = rank;
      cfg.max_iters = max_iters;
      cfg.threads = threads;
      MethodRunner runner(d, cfg);
      const MethodResult r = runner.run(method);
      print_accuracy(method.c_str(), r.predictions, d);
      for (const auto& [k, v] : r.config_chosen) {
        std::printf("  %s = %s\n", k.c_str(), format_double(v).c_str());
      }
      if (!out.empty()) write_predictions(out, r.predictions);
    } else if (*experiment) {
      const fs::path cfg_path(config_path);
      ExperimentConfig cfg =
          parse_experiment_config(read_text(cfg_path), cfg_path.parent_path());
      if (experiment->count("--seed")) {
        cfg.seed = seed;
        if (cfg.spec) cfg.spec->seed = seed;
      }
      if (experiment->count("--rank")) cfg.rank = rank;
      if (experiment->count("--max-iters")) cfg.max_iters = max_iters;
      if (experiment->count("--threads")) cfg.threads = threads;
      if (!out.empty()) cfg.output_dir = out;
      const ExperimentReport rep = run_experiment(cfg);
      const std::string json = report_to_json(rep);
      if (!cfg.output_dir.empty()) write_report(rep, cfg.output_dir);
      std::cout << format_report(json);
    } else if (*report) {
      std::cout << format_report(read_text(report_path));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
