#pragma once

// Test-time denoising of predictions. Each outer iteration t embeds f(t) and
// every feature set as centered, unit-norm kernels, weights the features by
// a softmin over their ambient distance to f(t), and then descends
//
//   O(f) = d^2(K~_f, K~_f(t)) + lambda * sum_i w_i d^2(K~_f, K~_i)
//
// on the raw prediction vector. The loop stops the first time validation
// rank accuracy fails to improve and returns the best iterate seen.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tupi/dependence.hpp"
#include "tupi/kernels.hpp"
#include "tupi/types.hpp"

namespace tupi {

struct DenoiseConfig {
  double lambda = 1.0;
  double sigma_w_sq = 1.0;
  int max_iters = 50;
  int rank = 50;
  int inner_steps = 20;
  double step_size = 0.0;  // <= 0 selects 0.1 / sqrt(n)
  KernelPath path = KernelPath::Automatic;

  /// Throws InvalidInput on non-positive fields or max_iters > 1000.
  /// lambda = 0 and max_iters = 0 are accepted as degenerate settings.
  void validate() const;
  double initial_step(Eigen::Index n) const;
};

struct DenoiseState {
  int t = 0;
  Predictions current;
  std::vector<double> weights;
  double validation_accuracy = 0.0;
  double step = 0.0;      // current descent step, carried between iterations
  double objective_before = 0.0;
  double objective_after = 0.0;
  int accepted_steps = 0;
  bool stalled = false;
};

struct DenoiseReport {
  Predictions final;
  int iterations_run = 0;   // outer iterations executed, including the last
  int best_iteration = 0;   // t of the returned iterate
  std::vector<double> accuracy_trace;              // entry 0 is f_initial
  std::vector<std::vector<double>> weight_trace;   // one per executed iteration
};

/// Optional extra term added to the inner objective: returns its value and,
/// when `gradient` is non-null, writes its gradient.
using Penalty = std::function<double(const Predictions& f, Vector* gradient)>;

/// Softmin weights exp(-d_i / sigma_w_sq), normalized to sum to 1.
std::vector<double> weights_from_distances(std::span<const double> distances,
                                           double sigma_w_sq);

std::vector<double> compute_weights(const CenteredEmbedding& f_embed,
                                    std::span<const CenteredEmbedding> feature_embeds,
                                    double sigma_w_sq);

/// Dense reference objective in terms of explicit embeddings. `sigma_f_sq`
/// is the (frozen) bandwidth used to embed `f`.
double objective(const Predictions& f, double sigma_f_sq,
                 const CenteredEmbedding& snapshot_embed,
                 std::span<const CenteredEmbedding> feature_embeds,
                 std::span<const double> weights, double lambda);

/// Feature kernels prepared once and shared read-only across runs.
class FeatureBank {
 public:
  FeatureBank(std::span<const FeatureSet> features, KernelPath path, Eigen::Index rank);

  KernelPath path() const { return path_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index rank() const { return rank_; }
  std::size_t size() const { return kernels_.size(); }
  const CenteredKernel& kernel(std::size_t i) const { return kernels_[i]; }

 private:
  KernelPath path_;
  Eigen::Index rows_ = 0;
  Eigen::Index rank_ = 0;
  std::vector<CenteredKernel> kernels_;
};

/// The inner objective of one outer iteration, frozen at a snapshot.
class StepObjective {
 public:
  StepObjective(const FeatureBank& bank, const Predictions& snapshot,
                const DenoiseConfig& config, const Penalty& penalty);
  // Targets point into this object and into `bank`, which must outlive it.
  StepObjective(const StepObjective&) = delete;
  StepObjective& operator=(const StepObjective&) = delete;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& feature_distances() const { return distances_; }
  double bandwidth_sq() const { return kernel_.bandwidth_sq(); }

  double value(const Predictions& f) const;
  double value(const Predictions& f, Vector& gradient) const;

 private:
  Penalty penalty_;
  PredictionKernel kernel_;
  CenteredKernel snapshot_;
  std::vector<double> distances_;
  std::vector<double> weights_;
  std::vector<DependenceTarget> targets_;
};

class Denoiser {
 public:
  Denoiser(std::shared_ptr<const FeatureBank> bank, DenoiseConfig config,
           Penalty penalty = {});

  const DenoiseConfig& config() const { return config_; }
  const FeatureBank& bank() const { return *bank_; }

  DenoiseState initial_state(const Predictions& f_initial) const;

  /// One outer iteration: recompute the weights at f(t), then take up to
  /// inner_steps backtracking gradient steps. A step that cannot reduce the
  /// objective leaves the state unchanged with `stalled` set.
  DenoiseState step(const DenoiseState& state) const;

  StepObjective objective_at(const Predictions& snapshot) const;

  DenoiseReport run(const Predictions& f_initial, const RankPairs& validation) const;

 private:
  std::shared_ptr<const FeatureBank> bank_;
  DenoiseConfig config_;
  Penalty penalty_;
};

/// Convenience wrapper: builds the feature bank and runs one configuration.
DenoiseReport run(const Predictions& f_initial, std::span<const FeatureSet> features,
                  const DenoiseConfig& config, const RankPairs& validation,
                  const Penalty& penalty = {});

struct GridCell {
  double lambda = 1.0;
  double sigma_w_sq = 1.0;
};

/// lambda and sigma_w^2 each over {1e-2, 1e-1, 1, 1e1, 1e2}.
std::vector<GridCell> default_grid();

struct TuneResult {
  DenoiseConfig config;
  DenoiseReport report;
  double validation_accuracy = 0.0;
  std::size_t cell_index = 0;
};

/// Runs every grid cell (concurrently when `threads` > 1) and keeps the one
/// with the highest validation accuracy; ties go to smaller lambda, then
/// smaller sigma_w^2, then the earlier cell.
TuneResult tune(const Predictions& f_initial, std::shared_ptr<const FeatureBank> bank,
                const RankPairs& validation, std::span<const GridCell> grid,
                const DenoiseConfig& base, unsigned threads = 0,
                const Penalty& penalty = {});

TuneResult tune(const Predictions& f_initial, std::span<const FeatureSet> features,
                const RankPairs& validation, std::span<const GridCell> grid,
                const DenoiseConfig& base, unsigned threads = 0);

}  // namespace tupi
