#include "tupi/dependence.hpp"

#include <cmath>

#include "tupi/error.hpp"
#include "tupi/kernels.hpp"

namespace tupi {
namespace {

// Matches the center_normalize floor on ||C K C||_F.
constexpr double kSelfFloor = 1e-24;

Matrix dense_prediction_kernel(const Predictions& f, double sigma_sq) {
  const Eigen::Index n = f.size();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d = f(i) - f(j);
      const double v = std::exp(-d * d / sigma_sq);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace

KernelPath resolve_path(KernelPath requested, Eigen::Index n, Eigen::Index rank) {
  if (requested != KernelPath::Automatic) return requested;
  return rank < n ? KernelPath::LowRank : KernelPath::Dense;
}

CenteredKernel::CenteredKernel(bool dense, Matrix data, double self, double bandwidth_sq)
    : dense_(dense), data_(std::move(data)), self_(self), bandwidth_sq_(bandwidth_sq) {
  if (!(self_ > kSelfFloor)) {
    throw DegenerateEmbedding("centered kernel vanishes (constant input?)");
  }
}

CenteredKernel CenteredKernel::dense(const Eigen::Ref<const Matrix>& values,
                                     double sigma_sq) {
  Matrix m = double_center(gaussian_kernel(values, sigma_sq).entries());
  const double self = m.squaredNorm();
  return CenteredKernel(true, std::move(m), self, sigma_sq);
}

CenteredKernel CenteredKernel::lowrank(const Eigen::Ref<const Matrix>& values,
                                       const BasisSet& basis, double sigma_sq) {
  const NystroemFactor factor = nystroem_factor(values, basis, sigma_sq);
  Matrix psi = center_columns(factor.whitened);
  const double self = (psi.transpose() * psi).squaredNorm();
  return CenteredKernel(false, std::move(psi), self, sigma_sq);
}

CenteredKernel CenteredKernel::from_features(const Eigen::Ref<const Matrix>& values,
                                             KernelPath path, Eigen::Index rank) {
  const double sigma_sq = bandwidth_heuristic(values);
  if (resolve_path(path, values.rows(), rank) == KernelPath::Dense) {
    return dense(values, sigma_sq);
  }
  return lowrank(values, select_basis(values, rank), sigma_sq);
}

PredictionKernel::PredictionKernel(KernelPath path, double sigma_sq,
                                   std::optional<BasisSet> basis)
    : path_(path), sigma_sq_(sigma_sq), basis_(std::move(basis)) {
  if (path_ == KernelPath::Automatic) {
    throw InvalidInput("PredictionKernel: path must be resolved");
  }
  if (!(sigma_sq_ > 0.0)) throw InvalidInput("PredictionKernel: bandwidth must be positive");
  if (path_ == KernelPath::LowRank) {
    if (!basis_ || basis_->dims() != 1) {
      throw InvalidInput("PredictionKernel: low-rank path needs a 1-d basis");
    }
    chol_ = basis_cholesky(basis_->points, sigma_sq_);
  }
}

PredictionKernel PredictionKernel::for_snapshot(const Predictions& f, KernelPath path,
                                                Eigen::Index rank) {
  const Matrix values = f;
  const double sigma_sq = bandwidth_heuristic(values);
  const KernelPath resolved = resolve_path(path, f.size(), rank);
  if (resolved == KernelPath::Dense) return PredictionKernel(resolved, sigma_sq);
  return PredictionKernel(resolved, sigma_sq, select_basis(values, rank));
}

CenteredKernel PredictionKernel::freeze(const Predictions& f) const {
  const Matrix values = f;
  if (path_ == KernelPath::Dense) return CenteredKernel::dense(values, sigma_sq_);
  return CenteredKernel::lowrank(values, *basis_, sigma_sq_);
}

DependenceEvaluation PredictionKernel::evaluate(const Predictions& f,
                                                std::span<const DependenceTarget> targets,
                                                Vector* gradient) const {
  if (!f.allFinite()) throw InvalidInput("PredictionKernel::evaluate: non-finite predictions");
  const Eigen::Index n = f.size();
  const bool dense = path_ == KernelPath::Dense;
  for (const auto& t : targets) {
    if (t.kernel->rows() != n || t.kernel->is_dense() != dense) {
      throw InvalidInput("PredictionKernel::evaluate: target kernel does not match");
    }
  }

  DependenceEvaluation out;
  out.similarity.reserve(targets.size());

  if (dense) {
    const Matrix k = dense_prediction_kernel(f, sigma_sq_);
    const Matrix mf = double_center(k);
    const double hff = mf.squaredNorm();
    if (!(hff > kSelfFloor)) throw DegenerateEmbedding("prediction kernel vanishes");
    for (const auto& t : targets) {
      const double hfj = k.cwiseProduct(t.kernel->data()).sum();
      const double rho = hfj / std::sqrt(hff * t.kernel->self());
      out.similarity.push_back(rho);
      out.value += t.coefficient * (1.0 - rho);
    }
    if (gradient) {
      Matrix q = Matrix::Zero(n, n);
      double self_coef = 0.0;
      for (std::size_t j = 0; j < targets.size(); ++j) {
        const auto& t = targets[j];
        if (t.coefficient == 0.0) continue;
        q.noalias() -= (2.0 * t.coefficient / std::sqrt(hff * t.kernel->self())) *
                       t.kernel->data();
        self_coef += 2.0 * t.coefficient * out.similarity[j] / hff;
      }
      q.noalias() += self_coef * mf;
      gradient->resize(n);
      for (Eigen::Index kk = 0; kk < n; ++kk) {
        double acc = 0.0;
        for (Eigen::Index l = 0; l < n; ++l) {
          acc += (f(kk) - f(l)) * k(l, kk) * q(l, kk);
        }
        (*gradient)(kk) = -2.0 / sigma_sq_ * acc;
      }
    }
    return out;
  }

  const Matrix& b = basis_->points;
  const Matrix x = cross_kernel(Matrix(f), b, sigma_sq_);
  const Matrix phi = whiten(x, chol_);
  const Matrix phi_c = center_columns(phi);
  const Matrix p = phi_c.transpose() * phi_c;
  const double hff = p.squaredNorm();
  if (!(hff > kSelfFloor)) throw DegenerateEmbedding("prediction kernel vanishes");

  std::vector<Matrix> cross;
  cross.reserve(targets.size());
  for (const auto& t : targets) {
    Matrix m = phi.transpose() * t.kernel->data();
    const double rho = m.squaredNorm() / std::sqrt(hff * t.kernel->self());
    out.similarity.push_back(rho);
    out.value += t.coefficient * (1.0 - rho);
    cross.push_back(std::move(m));
  }
  if (gradient) {
    Matrix g_white = Matrix::Zero(n, phi.cols());
    double self_coef = 0.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto& t = targets[j];
      if (t.coefficient == 0.0) continue;
      g_white.noalias() -= (2.0 * t.coefficient / std::sqrt(hff * t.kernel->self())) *
                           (t.kernel->data() * cross[j].transpose());
      self_coef += 2.0 * t.coefficient * out.similarity[j] / hff;
    }
    g_white.noalias() += self_coef * (phi_c * p);
    const Matrix g = unwhiten_gradient(g_white, chol_);
    gradient->resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index l = 0; l < x.cols(); ++l) {
        acc += (f(i) - b(l, 0)) * x(i, l) * g(i, l);
      }
      (*gradient)(i) = -2.0 / sigma_sq_ * acc;
    }
  }
  return out;
}

}  // namespace tupi
