#include "tupi/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Cholesky>

#include "tupi/error.hpp"

namespace tupi {
namespace {

bool row_less(const Matrix& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (m(a, c) != m(b, c)) return m(a, c) < m(b, c);
  }
  return false;
}

bool row_equal(const Matrix& m, Eigen::Index a, Eigen::Index b) {
  return (m.row(a).array() == m.row(b).array()).all();
}

// Distinct rows in lexicographic order.
Matrix distinct_rows(const Matrix& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return row_less(values, a, b); });
  std::vector<Eigen::Index> keep;
  for (Eigen::Index idx : order) {
    if (keep.empty() || !row_equal(values, keep.back(), idx)) keep.push_back(idx);
  }
  Matrix out(static_cast<Eigen::Index>(keep.size()), values.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = values.row(keep[i]);
  }
  return out;
}

Matrix kmeans_centers(const Matrix& values, Eigen::Index k, std::uint64_t seed) {
  const Eigen::Index n = values.rows();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

  Matrix centers(k, values.cols());
  centers.row(0) = values.row(pick(rng));
  Vector nearest = (values.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    centers.row(c) = values.row(far);
    nearest = nearest.cwiseMin((values.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < kKMeansIterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - values.row(i)).rowwise().squaredNorm().minCoeff(&best);
      auto& slot = assign[static_cast<std::size_t>(i)];
      if (iter == 0 || best != slot) changed = true;
      slot = best;
    }
    Matrix sums = Matrix::Zero(k, values.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += values.row(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      // Empty clusters keep their previous center.
      if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    }
    if (!changed) break;
  }
  return centers;
}

void check_factor_pair(const NystroemFactor& a, const NystroemFactor& b) {
  if (a.rows() != b.rows()) {
    throw InvalidInput("lowrank_dependence: factors cover different instance counts");
  }
}

}  // namespace

Matrix center_columns(const Eigen::Ref<const Matrix>& m) {
  Matrix out = m;
  out.rowwise() -= m.colwise().mean();
  return out;
}

BasisSet select_basis(const Eigen::Ref<const Matrix>& values, Eigen::Index count,
                      std::uint64_t seed) {
  if (count < 2) throw InvalidInput("select_basis: need at least 2 basis points");
  if (values.rows() < 2) throw InvalidInput("select_basis: need at least 2 rows");
  require_finite(values, "select_basis");

  const Matrix data = values;
  if (data.cols() == 1) {
    const double lo = data.minCoeff();
    const double hi = data.maxCoeff();
    if (!(hi > lo)) throw DegenerateRange("select_basis: 1-d values have zero range");
  }
  Matrix distinct = distinct_rows(data);
  if (distinct.rows() < 2) throw DegenerateRange("select_basis: all rows identical");
  if (distinct.rows() <= count) {
    return BasisSet{std::move(distinct), BasisKind::VerbatimPoints};
  }
  if (data.cols() == 1) {
    const double lo = data.minCoeff();
    const double hi = data.maxCoeff();
    Matrix pts(count, 1);
    for (Eigen::Index i = 0; i < count; ++i) {
      pts(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    pts(count - 1, 0) = hi;
    return BasisSet{std::move(pts), BasisKind::IntervalEndpoints};
  }
  return BasisSet{kmeans_centers(data, count, seed), BasisKind::ClusterCenters};
}

Matrix cross_kernel(const Eigen::Ref<const Matrix>& values, const Matrix& basis,
                    double sigma_sq) {
  if (values.cols() != basis.cols()) {
    throw InvalidInput("cross_kernel: basis dimension does not match values");
  }
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
    throw InvalidInput("cross_kernel: bandwidth must be positive and finite");
  }
  const Eigen::Index n = values.rows();
  const Eigen::Index k = basis.rows();
  Matrix out(n, k);
  if (values.cols() == 1) {
    for (Eigen::Index l = 0; l < k; ++l) {
      const double b = basis(l, 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = values(i, 0) - b;
        out(i, l) = std::exp(-d * d / sigma_sq);
      }
    }
    return out;
  }
  for (Eigen::Index l = 0; l < k; ++l) {
    out.col(l) = ((values.rowwise() - basis.row(l)).rowwise().squaredNorm() / -sigma_sq)
                     .array()
                     .exp()
                     .matrix();
  }
  return out;
}

Matrix basis_cholesky(const Matrix& basis_points, double sigma_sq) {
  const Eigen::Index k = basis_points.rows();
  Matrix kbb = cross_kernel(basis_points, basis_points, sigma_sq);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      if (kbb(i, j) >= 1.0 - std::numeric_limits<double>::epsilon()) {
        throw SingularBasis("nystroem_factor: basis points " + std::to_string(i) +
                            " and " + std::to_string(j) + " coincide at this bandwidth");
      }
    }
  }
  kbb.diagonal().array() += kNystroemJitter;
  Eigen::LLT<Matrix> llt(kbb);
  if (llt.info() != Eigen::Success) {
    throw SingularBasis("nystroem_factor: basis kernel is not positive definite");
  }
  return llt.matrixL();
}

Matrix whiten(const Matrix& cross, const Matrix& chol) {
  Matrix yt = chol.triangularView<Eigen::Lower>().solve(cross.transpose());
  return yt.transpose();
}

Matrix unwhiten_gradient(const Matrix& g_white, const Matrix& chol) {
  Matrix gt = chol.transpose().triangularView<Eigen::Upper>().solve(g_white.transpose());
  return gt.transpose();
}

NystroemFactor nystroem_factor(const Eigen::Ref<const Matrix>& values,
                               const BasisSet& basis, double sigma_sq) {
  require_finite(values, "nystroem_factor");
  if (values.cols() != basis.dims()) {
    throw InvalidInput("nystroem_factor: basis dimension does not match values");
  }
  const Eigen::Index k = basis.size();
  NystroemFactor out;
  out.chol = basis_cholesky(basis.points, sigma_sq);
  const auto lower = out.chol.triangularView<Eigen::Lower>();
  Matrix linv = lower.solve(Matrix::Identity(k, k));
  out.basis_inv = linv.transpose() * linv;
  out.basis_inv = 0.5 * (out.basis_inv + out.basis_inv.transpose());
  out.cross = cross_kernel(values, basis.points, sigma_sq);
  out.whitened = whiten(out.cross, out.chol);
  out.bandwidth_sq = sigma_sq;
  out.source_dim = values.cols();
  return out;
}

Matrix reconstruct(const NystroemFactor& factor) {
  return factor.whitened * factor.whitened.transpose();
}

double lowrank_dependence(const NystroemFactor& f_factor,
                          const NystroemFactor& h_factor) {
  check_factor_pair(f_factor, h_factor);
  // With K ~ Phi Phi^T, tr[K_f C K_h C] = ||Phi_f^T C Psi_h||_F^2. C is
  // idempotent, so centering one side is enough.
  const Matrix m = f_factor.whitened.transpose() * center_columns(h_factor.whitened);
  return m.squaredNorm();
}

Vector lowrank_dependence_gradient(const Predictions& f, const BasisSet& f_basis,
                                   double sigma_f_sq,
                                   const NystroemFactor& h_factor) {
  if (f.size() != h_factor.rows()) {
    throw InvalidInput("lowrank_dependence_gradient: length mismatch");
  }
  if (f_basis.dims() != 1) {
    throw InvalidInput("lowrank_dependence_gradient: predictions need a 1-d basis");
  }
  const NystroemFactor ff = nystroem_factor(Matrix(f), f_basis, sigma_f_sq);
  const Matrix psi = center_columns(h_factor.whitened);
  const Matrix m = ff.whitened.transpose() * psi;
  // dC/dK_fB = 2 Psi M^T L^{-1}
  const Matrix g_white = 2.0 * psi * m.transpose();
  const Matrix g = unwhiten_gradient(g_white, ff.chol);
  Vector grad(f.size());
  const Matrix& x = ff.cross;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < x.cols(); ++l) {
      const double dx = -2.0 * (f(i) - f_basis.points(l, 0)) / sigma_f_sq * x(i, l);
      acc += dx * g(i, l);
    }
    grad(i) = acc;
  }
  return grad;
}

}  // namespace tupi
