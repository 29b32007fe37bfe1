#pragma once

// Normalized kernel dependence between an evolving prediction vector and a
// set of fixed kernels, with analytic gradients. Two interchangeable
// backends: dense n x n kernels, and Nystroem factors that stay O(nK).

#include <optional>
#include <span>
#include <vector>

#include "tupi/lowrank.hpp"
#include "tupi/types.hpp"

namespace tupi {

enum class KernelPath { Automatic, Dense, LowRank };

/// Automatic becomes LowRank when rank < n, Dense otherwise.
KernelPath resolve_path(KernelPath requested, Eigen::Index n, Eigen::Index rank);

/// A fixed, centered kernel. Dense: C K C (n x n). Low rank: the centered
/// whitened cross kernel C Phi (n x K), so that C K C ~ (C Phi)(C Phi)^T.
class CenteredKernel {
 public:
  static CenteredKernel dense(const Eigen::Ref<const Matrix>& values, double sigma_sq);
  static CenteredKernel lowrank(const Eigen::Ref<const Matrix>& values,
                                const BasisSet& basis, double sigma_sq);
  /// Heuristic bandwidth and (for low rank) select_basis with `rank` points.
  static CenteredKernel from_features(const Eigen::Ref<const Matrix>& values,
                                      KernelPath path, Eigen::Index rank);

  bool is_dense() const { return dense_; }
  const Matrix& data() const { return data_; }
  /// Unnormalized self dependence tr[K C K C].
  double self() const { return self_; }
  double bandwidth_sq() const { return bandwidth_sq_; }
  Eigen::Index rows() const { return data_.rows(); }

 private:
  CenteredKernel(bool dense, Matrix data, double self, double bandwidth_sq);

  bool dense_ = true;
  Matrix data_;
  double self_ = 0.0;
  double bandwidth_sq_ = 1.0;
};

struct DependenceTarget {
  const CenteredKernel* kernel = nullptr;
  double coefficient = 0.0;
};

struct DependenceEvaluation {
  double value = 0.0;               // sum_j c_j (1 - rho_j)
  std::vector<double> similarity;   // rho_j = tr[K~_f K~_j]
};

/// Gaussian kernel on a prediction vector with a frozen bandwidth and (on
/// the low-rank path) a frozen 1-d basis.
class PredictionKernel {
 public:
  PredictionKernel(KernelPath path, double sigma_sq, std::optional<BasisSet> basis = {});

  /// Builds the kernel of `f` over `rank` interval endpoints (low rank) with
  /// the heuristic bandwidth of `f`.
  static PredictionKernel for_snapshot(const Predictions& f, KernelPath path,
                                       Eigen::Index rank);

  KernelPath path() const { return path_; }
  double bandwidth_sq() const { return sigma_sq_; }
  const std::optional<BasisSet>& basis() const { return basis_; }

  /// Kernel of `f` as a fixed target.
  CenteredKernel freeze(const Predictions& f) const;

  /// Throws DegenerateEmbedding if the centered kernel of f vanishes.
  DependenceEvaluation evaluate(const Predictions& f,
                                std::span<const DependenceTarget> targets,
                                Vector* gradient = nullptr) const;

 private:
  KernelPath path_;
  double sigma_sq_;
  std::optional<BasisSet> basis_;
  Matrix chol_;
};

}  // namespace tupi
