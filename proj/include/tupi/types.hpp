#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tupi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-instance prediction scores (f^I, f(t), f^O). Only the order matters
/// for ranking, so the scale is arbitrary.
using Predictions = Eigen::VectorXd;

/// A named n x d matrix of per-instance feature vectors.
struct FeatureSet {
  std::string name;
  Matrix values;

  FeatureSet() = default;
  FeatureSet(std::string name_, Matrix values_)
      : name(std::move(name_)), values(std::move(values_)) {}

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index dims() const { return values.cols(); }

  /// Throws InvalidInput unless n >= 2, d >= 1 and every entry is finite.
  void validate() const;

  /// Wraps a prediction vector as a one-column feature set.
  static FeatureSet from_predictions(std::string name, const Predictions& p);
};

/// rank(q) > rank(r).
struct RankPair {
  std::size_t q = 0;
  std::size_t r = 0;

  friend bool operator==(const RankPair&, const RankPair&) = default;
  friend auto operator<=>(const RankPair&, const RankPair&) = default;
};

using RankPairs = std::vector<RankPair>;

/// Throws InvalidInput on out-of-range indices, q == r, or exact duplicates.
void validate_pairs(const RankPairs& pairs, std::size_t n);

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

}  // namespace tupi
