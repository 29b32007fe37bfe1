#include "tupi/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "tupi/error.hpp"

namespace tupi {
namespace {

constexpr double kScaleFloor = 1e-12;

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> pairwise_distances(const Eigen::Ref<const Matrix>& values) {
  const Eigen::Index n = values.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.push_back((values.row(i) - values.row(j)).norm());
    }
  }
  return out;
}

double bandwidth_heuristic(const Eigen::Ref<const Matrix>& values) {
  if (values.rows() < 2 || values.cols() < 1) {
    throw InvalidInput("bandwidth_heuristic: need at least 2 rows and 1 column");
  }
  require_finite(values, "bandwidth_heuristic");

  const std::vector<double> dist = pairwise_distances(values);
  const double count = static_cast<double>(dist.size());
  double mean = 0.0;
  for (double d : dist) mean += d;
  mean /= count;
  double var = 0.0;
  for (double d : dist) var += (d - mean) * (d - mean);
  var /= count;
  const double sd = std::sqrt(var);
  if (sd >= kScaleFloor) return 2.0 * var;

  const double med = median_of(dist);
  if (med >= kScaleFloor) return med * med;

  const double max_dist = *std::max_element(dist.begin(), dist.end());
  if (max_dist >= kScaleFloor) return 1.0;
  throw DegenerateScale("bandwidth_heuristic: all rows are identical");
}

KernelMatrix gaussian_kernel(const Eigen::Ref<const Matrix>& values,
                             double sigma_sq) {
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
    throw InvalidInput("gaussian_kernel: bandwidth must be positive and finite");
  }
  require_finite(values, "gaussian_kernel");
  const Eigen::Index n = values.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-(values.row(i) - values.row(j)).squaredNorm() / sigma_sq);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return KernelMatrix(std::move(k), sigma_sq);
}

Matrix double_center(const Eigen::Ref<const Matrix>& k) {
  const Vector row_mean = k.rowwise().mean();
  const Eigen::RowVectorXd col_mean = k.colwise().mean();
  const double grand = k.mean();
  Matrix out = k;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean;
  out.array() += grand;
  return out;
}

CenteredEmbedding center_normalize(const KernelMatrix& k) {
  const Matrix& kk = k.entries();
  const double scale = double_center(kk).norm();
  if (!(scale > kScaleFloor)) {
    throw DegenerateEmbedding("center_normalize: centered kernel vanishes");
  }
  // K C subtracts each row's mean from that row.
  Matrix kc = kk;
  kc.colwise() -= kk.rowwise().mean();
  kc /= scale;
  return CenteredEmbedding(std::move(kc));
}

CenteredEmbedding embed(const Eigen::Ref<const Matrix>& values) {
  return center_normalize(gaussian_kernel(values, bandwidth_heuristic(values)));
}

double hsic_estimate(const KernelMatrix& kv, const KernelMatrix& kw) {
  if (kv.size() != kw.size()) {
    throw InvalidInput("hsic_estimate: kernel dimensions differ");
  }
  return double_center(kv.entries()).cwiseProduct(kw.entries()).sum();
}

double embedding_inner(const CenteredEmbedding& a, const CenteredEmbedding& b) {
  if (a.size() != b.size()) {
    throw InvalidInput("embedding_inner: dimensions differ");
  }
  // Pairing (i,j) with (j,i) keeps the sum bitwise symmetric in (a, b).
  const Matrix& x = a.entries();
  const Matrix& y = b.entries();
  const Eigen::Index n = x.rows();
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    total += x(j, j) * y(j, j);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      total += x(i, j) * y(j, i) + x(j, i) * y(i, j);
    }
  }
  return total;
}

double ambient_distance(const CenteredEmbedding& a, const CenteredEmbedding& b) {
  return 1.0 - embedding_inner(a, b);
}

}  // namespace tupi
