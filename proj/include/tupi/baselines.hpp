#pragma once

// Competing test-time refinements built on a k-nearest-neighbor graph over
// the test-time features: smoothing of f^I (CoConut adapted to ranking), a
// Laplacian-regularized ranker trained on validation pairs, and two ways of
// combining either with the denoiser.

#include <span>
#include <string>
#include <vector>

#include "tupi/denoiser.hpp"
#include "tupi/types.hpp"

namespace tupi {

struct NeighborGraph {
  Matrix laplacian;            // L = D - W, symmetric
  int k = 0;
  std::vector<double> sigma_c; // per-row kernel scale
};

/// W[i][j] = exp(-|h_i - h_j|^2 / sigma_i^2) over the k nearest neighbors
/// of i, with sigma_i twice the mean neighbor distance; W is symmetrized.
/// Rows whose neighbors all coincide fall back to the global median
/// distance. Throws DegenerateScale when every row is identical.
NeighborGraph knn_laplacian(const FeatureSet& h, int k);

/// Columns of all feature sets side by side.
FeatureSet concatenate(std::span<const FeatureSet> features, std::string name = "features");

struct CoconutConfig {
  double lambda_c = 1.0;
  int k_c = 10;

  void validate(Eigen::Index n) const;
};

/// argmin_v |v - f|^2 + (lambda_c / k_c) v^T L v, solved exactly.
Predictions coconut_refine(const Predictions& f_initial, const NeighborGraph& graph,
                           const CoconutConfig& config);

inline constexpr int kSslSteps = 500;

/// Minimizes hinge_rank_loss(f, validation) + lambda_ssl f^T L f from f = 0.
Predictions ssl_laplacian_rank(const FeatureSet& h, const RankPairs& validation, int graph_k,
                               double lambda_ssl);
Predictions ssl_laplacian_rank(const NeighborGraph& graph, const RankPairs& validation,
                               double lambda_ssl);

/// (lambda_c / k_c) f^T L f as a denoiser penalty.
Penalty laplacian_penalty(const NeighborGraph& graph, const CoconutConfig& config);

/// The denoiser with the Laplacian smoothness term added to every inner
/// objective.
DenoiseReport combined_refine(const Predictions& f_initial, std::span<const FeatureSet> features,
                              const DenoiseConfig& config, const NeighborGraph& graph,
                              const CoconutConfig& coconut, const RankPairs& validation);

struct Candidate {
  std::string name;
  Predictions predictions;
};

/// Highest validation accuracy wins; ties go to the first listed.
const Candidate& select_by_validation(std::span<const Candidate> candidates,
                                      const RankPairs& validation);

}  // namespace tupi
