#pragma once

// Nystroem factorization K ~ K_xB (K_BB + eps I)^{-1} K_xB^T and the low-rank
// HSIC value and gradient built on it. Nothing here materializes an n x n
// matrix; memory is O(nK + K^2).

#include <cstdint>

#include "tupi/types.hpp"

namespace tupi {

enum class BasisKind { IntervalEndpoints, ClusterCenters, VerbatimPoints };

struct BasisSet {
  Matrix points;  // K x d
  BasisKind kind = BasisKind::IntervalEndpoints;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dims() const { return points.cols(); }
};

struct NystroemFactor {
  Matrix cross;       // n x K, k(x_i, b_l)
  Matrix basis_inv;   // K x K, (K_BB + eps I)^{-1}
  Matrix chol;        // lower L with L L^T = K_BB + eps I
  Matrix whitened;    // cross * L^{-T}; whitened * whitened^T ~ K
  double bandwidth_sq = 1.0;
  Eigen::Index source_dim = 1;

  Eigen::Index rows() const { return cross.rows(); }
  Eigen::Index rank() const { return cross.cols(); }
};

inline constexpr double kNystroemJitter = 1e-8;
inline constexpr std::uint64_t kDefaultBasisSeed = 0x9e3779b97f4a7c15ULL;
inline constexpr int kKMeansIterations = 20;

/// 1-d: `count` equispaced points over [min, max]. d > 1: seeded k-means
/// centers. Either way, when there are at most `count` distinct rows those
/// rows are returned (sorted) instead.
BasisSet select_basis(const Eigen::Ref<const Matrix>& values, Eigen::Index count,
                      std::uint64_t seed = kDefaultBasisSeed);

/// exp(-||x_i - b_l||^2 / sigma_sq), n x K.
Matrix cross_kernel(const Eigen::Ref<const Matrix>& values, const Matrix& basis,
                    double sigma_sq);

/// Throws SingularBasis when two basis points have numerically identical
/// kernel columns (the jitter only hides that rank deficiency).
NystroemFactor nystroem_factor(const Eigen::Ref<const Matrix>& values,
                               const BasisSet& basis, double sigma_sq);

/// cross * basis_inv * cross^T. Test/diagnostic helper; this one is n x n.
Matrix reconstruct(const NystroemFactor& factor);

/// Low-rank HSIC, tr[K_fB S_fi]; centering is applied as column-mean
/// subtraction of the cross kernels.
double lowrank_dependence(const NystroemFactor& f_factor,
                          const NystroemFactor& h_factor);

/// d lowrank_dependence / d f with sigma_f^2 and the basis held fixed.
Vector lowrank_dependence_gradient(const Predictions& f, const BasisSet& f_basis,
                                   double sigma_f_sq,
                                   const NystroemFactor& h_factor);

/// Throws SingularBasis on coincident basis points; returns the Cholesky
/// factor of K_BB + eps I.
Matrix basis_cholesky(const Matrix& basis_points, double sigma_sq);

/// x L^{-T}, i.e. solves L y^T = x^T.
Matrix whiten(const Matrix& cross, const Matrix& chol);

/// Maps a gradient taken w.r.t. the whitened cross kernel back to the raw
/// cross kernel: g L^{-1}.
Matrix unwhiten_gradient(const Matrix& g_white, const Matrix& chol);

/// Column-centered copy, C * m.
Matrix center_columns(const Eigen::Ref<const Matrix>& m);

}  // namespace tupi
