#pragma once

#include <cstdint>

#include "tupi/types.hpp"

namespace tupi {

/// Fraction of pairs with f[q] > f[r] strictly; ties count as wrong.
double rank_accuracy(const Predictions& f, const RankPairs& pairs);

/// Sum over pairs of max(0, 1 - (f[q] - f[r]))^2.
double hinge_rank_loss(const Predictions& f, const RankPairs& pairs);

/// Loss and d loss / d f.
double hinge_rank_loss(const Predictions& f, const RankPairs& pairs, Vector& gradient);

struct LinearRanker {
  Vector weights;
  double reg = 1.0;

  Predictions score(const Eigen::Ref<const Matrix>& g) const { return g * weights; }
};

inline constexpr int kRankerSteps = 500;

/// Minimizes hinge_rank_loss(G w) + reg ||w||^2 by full-batch gradient
/// descent with backtracking, starting from w = 0.
LinearRanker train_linear_ranker(const FeatureSet& g, const RankPairs& pairs, double reg);

/// Draws `count` distinct ordered pairs with y[q] > y[r] uniformly at
/// random; if fewer exist, returns all of them. Throws NoOrderedPairs when
/// every score is tied.
RankPairs pairs_from_scores(const Predictions& y, std::size_t count, std::uint64_t seed);

}  // namespace tupi
