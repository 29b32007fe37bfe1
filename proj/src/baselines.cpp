#include "tupi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "tupi/error.hpp"
#include "tupi/kernels.hpp"
#include "tupi/ranking.hpp"

namespace tupi {
namespace {

constexpr double kScaleFloor = 1e-12;

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

NeighborGraph knn_laplacian(const FeatureSet& h, int k) {
  h.validate();
  const Eigen::Index n = h.rows();
  if (k < 1 || k >= n) throw InvalidInput("knn_laplacian: k must lie in [1, n)");

  const std::vector<double> upper = pairwise_distances(h.values);
  Matrix dist = Matrix::Zero(n, n);
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = upper[at++];
  }
  if (*std::max_element(upper.begin(), upper.end()) <= kScaleFloor) {
    throw DegenerateScale("knn_laplacian: all rows are identical");
  }
  double fallback = median(upper);
  if (fallback <= kScaleFloor) {
    std::vector<double> positive;
    for (double d : upper) {
      if (d > kScaleFloor) positive.push_back(d);
    }
    fallback = median(std::move(positive));
  }

  NeighborGraph g;
  g.k = k;
  g.sigma_c.resize(static_cast<std::size_t>(n));
  Matrix w = Matrix::Zero(n, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // Duplicates also sit at distance 0, so drop self by index; distance
    // ties go to the lower index.
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
                      });
    double mean = 0.0;
    for (int j = 0; j < k; ++j) mean += dist(i, order[static_cast<std::size_t>(j)]);
    mean /= k;
    double sigma = 2.0 * mean;
    if (sigma <= kScaleFloor) sigma = fallback;
    g.sigma_c[static_cast<std::size_t>(i)] = sigma;
    for (int j = 0; j < k; ++j) {
      const Eigen::Index nb = order[static_cast<std::size_t>(j)];
      const double d = dist(i, nb);
      w(i, nb) = std::exp(-d * d / (sigma * sigma));
    }
    order.resize(static_cast<std::size_t>(n));
  }
  const Matrix sym = 0.5 * (w + w.transpose());
  g.laplacian = -sym;
  g.laplacian.diagonal() = sym.rowwise().sum();
  return g;
}

FeatureSet concatenate(std::span<const FeatureSet> features, std::string name) {
  if (features.empty()) throw InvalidInput("concatenate: no feature sets");
  const Eigen::Index n = features.front().rows();
  Eigen::Index cols = 0;
  for (const auto& f : features) {
    if (f.rows() != n) throw InvalidInput("concatenate: row counts differ");
    cols += f.dims();
  }
  Matrix out(n, cols);
  Eigen::Index at = 0;
  for (const auto& f : features) {
    out.middleCols(at, f.dims()) = f.values;
    at += f.dims();
  }
  return FeatureSet(std::move(name), std::move(out));
}

void CoconutConfig::validate(Eigen::Index n) const {
  if (!(lambda_c >= 0.0) || !std::isfinite(lambda_c)) {
    throw InvalidInput("CoconutConfig: lambda_c must be non-negative");
  }
  if (k_c < 1 || k_c >= n) throw InvalidInput("CoconutConfig: k_c must lie in [1, n)");
}

Predictions coconut_refine(const Predictions& f_initial, const NeighborGraph& graph,
                           const CoconutConfig& config) {
  const Eigen::Index n = f_initial.size();
  if (graph.laplacian.rows() != n) throw InvalidInput("coconut_refine: size mismatch");
  config.validate(n);
  require_finite(f_initial, "coconut_refine");
  if (config.lambda_c == 0.0) return f_initial;

  const double c = config.lambda_c / config.k_c;
  Matrix a = c * graph.laplacian;
  a.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalFailure("coconut_refine: factorization failed");
  Predictions v = llt.solve(f_initial);
  const double residual = (a * v - f_initial).norm();
  if (!v.allFinite() || residual >= 1e-8 * std::max(f_initial.norm(), 1e-300)) {
    throw NumericalFailure("coconut_refine: solve residual too large");
  }
  return v;
}

Predictions ssl_laplacian_rank(const NeighborGraph& graph, const RankPairs& validation,
                               double lambda_ssl) {
  if (validation.empty()) throw InvalidInput("ssl_laplacian_rank: validation pairs required");
  if (!(lambda_ssl >= 0.0)) throw InvalidInput("ssl_laplacian_rank: lambda must be >= 0");
  const Matrix& lap = graph.laplacian;
  const Eigen::Index n = lap.rows();
  validate_pairs(validation, static_cast<std::size_t>(n));

  auto objective = [&](const Vector& f, Vector* grad) {
    Vector lf = lap * f;
    double v = 0.0;
    if (grad) {
      v = hinge_rank_loss(f, validation, *grad);
      *grad += 2.0 * lambda_ssl * lf;
    } else {
      v = hinge_rank_loss(f, validation);
    }
    return v + lambda_ssl * f.dot(lf);
  };

  Vector f = Vector::Zero(n);
  Vector grad;
  double value = objective(f, &grad);
  // Inverse of a curvature bound: each node's hinge curvature plus the
  // Laplacian's Gershgorin bound.
  const double curvature = 4.0 * static_cast<double>(validation.size()) +
                           4.0 * lambda_ssl * lap.diagonal().maxCoeff();
  double step = 1.0 / std::max(curvature, 1.0);
  for (int it = 0; it < kSslSteps; ++it) {
    if (grad.squaredNorm() == 0.0) break;
    bool accepted = false;
    for (int halving = 0; halving < 50; ++halving) {
      const Vector trial = f - step * grad;
      if (objective(trial, nullptr) <= value) {
        f = trial;
        value = objective(f, &grad);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step *= 2.0;
  }
  return f;
}

Predictions ssl_laplacian_rank(const FeatureSet& h, const RankPairs& validation, int graph_k,
                               double lambda_ssl) {
  return ssl_laplacian_rank(knn_laplacian(h, graph_k), validation, lambda_ssl);
}

Penalty laplacian_penalty(const NeighborGraph& graph, const CoconutConfig& config) {
  config.validate(graph.laplacian.rows());
  const double c = config.lambda_c / config.k_c;
  const Matrix* lap = &graph.laplacian;
  return [c, lap](const Predictions& f, Vector* gradient) {
    const Vector lf = *lap * f;
    if (gradient) *gradient = 2.0 * c * lf;
    return c * f.dot(lf);
  };
}

DenoiseReport combined_refine(const Predictions& f_initial, std::span<const FeatureSet> features,
                              const DenoiseConfig& config, const NeighborGraph& graph,
                              const CoconutConfig& coconut, const RankPairs& validation) {
  return run(f_initial, features, config, validation, laplacian_penalty(graph, coconut));
}

const Candidate& select_by_validation(std::span<const Candidate> candidates,
                                      const RankPairs& validation) {
  if (candidates.empty()) throw InvalidInput("select_by_validation: no candidates");
  std::size_t best = 0;
  double best_acc = rank_accuracy(candidates[0].predictions, validation);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double a = rank_accuracy(candidates[i].predictions, validation);
    if (a > best_acc) {
      best_acc = a;
      best = i;
    }
  }
  return candidates[best];
}

}  // namespace tupi
