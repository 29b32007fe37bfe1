#pragma once

// Controlled ranking tasks: a latent target, a weak base view for the initial
// ranker, noisy copies of the target as test-time features, random
// distractors, and copies of the initial predictions.

#include <cstdint>
#include <vector>

#include "tupi/ranking.hpp"
#include "tupi/types.hpp"

namespace tupi {

struct SyntheticSpec {
  int n = 500;
  int d_base = 5;
  double noise_level = 0.5;               // std of the noise added to the base view
  std::vector<double> gt_feature_noise;   // one 1-d target feature per entry
  int distractors = 0;
  int distractor_min_dim = 2;
  int distractor_max_dim = 20;
  int fi_copies = 0;
  int train_pairs = 200;
  int validation_pairs = 50;
  int test_pairs = 2000;
  std::vector<double> ranker_regs = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::uint64_t seed = 0;

  /// Throws InvalidInput unless n >= 10 and all counts are non-negative.
  void validate() const;
};

struct SyntheticTask {
  FeatureSet base;                  // G, the initial ranker's view
  std::vector<FeatureSet> features; // test-time feature sets, in spec order
  Predictions target;               // f*
  Predictions initial;              // f^I from the linear ranker on G
  double ranker_reg = 0.0;
  RankPairs train;
  RankPairs validation;
  RankPairs test;
};

SyntheticTask generate_synthetic(const SyntheticSpec& spec);

/// Rescales to [0, 1]; a constant vector maps to zeros.
Predictions min_max_scale(const Predictions& v);

/// 10 log10(1 / mse) of `noisy` against `clean`, peak value 1.
double psnr_db(const Predictions& clean, const Predictions& noisy);

/// Trains the linear ranker for each reg on `train` and keeps the one with
/// the highest accuracy on `validation` (first on ties).
LinearRanker select_linear_ranker(const FeatureSet& g, const RankPairs& train,
                                  const RankPairs& validation,
                                  const std::vector<double>& regs);

}  // namespace tupi
