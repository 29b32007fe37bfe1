#pragma once

// Gaussian kernels, bandwidth selection and the centered, unit-norm kernel
// embedding on which dependence between predictions and features is measured.

#include <vector>

#include "tupi/types.hpp"

namespace tupi {

/// Symmetric Gaussian kernel matrix with its squared bandwidth.
class KernelMatrix {
 public:
  KernelMatrix(Matrix entries, double bandwidth_sq)
      : entries_(std::move(entries)), bandwidth_sq_(bandwidth_sq) {}

  const Matrix& entries() const { return entries_; }
  double bandwidth_sq() const { return bandwidth_sq_; }
  Eigen::Index size() const { return entries_.rows(); }

 private:
  Matrix entries_;
  double bandwidth_sq_;
};

/// K C / ||C K C||_F where C = I - 11^T/n. Self inner product tr[E E] is 1.
class CenteredEmbedding {
 public:
  explicit CenteredEmbedding(Matrix entries) : entries_(std::move(entries)) {}

  const Matrix& entries() const { return entries_; }
  Eigen::Index size() const { return entries_.rows(); }

 private:
  Matrix entries_;
};

/// All n(n-1)/2 Euclidean distances between rows, in (i < j) row-major order.
std::vector<double> pairwise_distances(const Eigen::Ref<const Matrix>& values);

/// sigma^2 = 2 * std(pairwise distances)^2 using the population standard
/// deviation. Falls back to median^2 when the spread is below 1e-12, then to
/// 1.0 when the median is zero but some rows still differ. Throws
/// DegenerateScale when every row is identical.
double bandwidth_heuristic(const Eigen::Ref<const Matrix>& values);

/// Entries exp(-||x_k - x_l||^2 / sigma_sq).
KernelMatrix gaussian_kernel(const Eigen::Ref<const Matrix>& values,
                             double sigma_sq);

/// C K C, computed by subtracting row and column means.
Matrix double_center(const Eigen::Ref<const Matrix>& k);

/// Throws DegenerateEmbedding if ||C K C||_F <= 1e-12.
CenteredEmbedding center_normalize(const KernelMatrix& k);

/// Heuristic bandwidth, Gaussian kernel, then center_normalize.
CenteredEmbedding embed(const Eigen::Ref<const Matrix>& values);

/// Biased empirical HSIC, tr[K_v C K_w C].
double hsic_estimate(const KernelMatrix& kv, const KernelMatrix& kw);

/// tr[A B].
double embedding_inner(const CenteredEmbedding& a, const CenteredEmbedding& b);

/// 1 - tr[A B].
double ambient_distance(const CenteredEmbedding& a, const CenteredEmbedding& b);

}  // namespace tupi
