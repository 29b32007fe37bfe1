#include "tupi/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tupi/error.hpp"

namespace tupi {
namespace {

// Independent, reproducible stream per purpose.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                       double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  // Row-major fill order keeps the stream layout independent of storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

// A smooth, mildly nonlinear score over the latent coordinates.
Predictions latent_target(const Matrix& z) {
  Predictions y(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      v += z(i, j) / static_cast<double>(j + 1);
    }
    v += 0.5 * std::sin(1.5 * z(i, 0)) + 0.3 * z(i, std::min<Eigen::Index>(1, z.cols() - 1)) *
                                             z(i, std::min<Eigen::Index>(1, z.cols() - 1));
    y(i) = v;
  }
  return y;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n < 10) throw InvalidInput("SyntheticSpec: n must be at least 10");
  if (d_base < 1) throw InvalidInput("SyntheticSpec: d_base must be positive");
  if (!(noise_level >= 0.0)) throw InvalidInput("SyntheticSpec: noise_level must be >= 0");
  for (double s : gt_feature_noise) {
    if (!(s >= 0.0)) throw InvalidInput("SyntheticSpec: feature noise must be >= 0");
  }
  if (distractors < 0 || fi_copies < 0) {
    throw InvalidInput("SyntheticSpec: counts must be non-negative");
  }
  if (distractors > 0 &&
      (distractor_min_dim < 1 || distractor_max_dim < distractor_min_dim)) {
    throw InvalidInput("SyntheticSpec: bad distractor dimension range");
  }
  if (train_pairs < 1 || validation_pairs < 1 || test_pairs < 1) {
    throw InvalidInput("SyntheticSpec: pair counts must be positive");
  }
  if (ranker_regs.empty()) throw InvalidInput("SyntheticSpec: no ranker regularization values");
}

Predictions min_max_scale(const Predictions& v) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (!(hi > lo)) return Predictions::Zero(v.size());
  return (v.array() - lo) / (hi - lo);
}

double psnr_db(const Predictions& clean, const Predictions& noisy) {
  const double mse = (clean - noisy).squaredNorm() / static_cast<double>(clean.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

LinearRanker select_linear_ranker(const FeatureSet& g, const RankPairs& train,
                                  const RankPairs& validation,
                                  const std::vector<double>& regs) {
  LinearRanker best;
  double best_acc = -1.0;
  for (double reg : regs) {
    LinearRanker r = train_linear_ranker(g, train, reg);
    const double acc = rank_accuracy(r.score(g.values), validation);
    if (acc > best_acc) {
      best_acc = acc;
      best = std::move(r);
    }
  }
  return best;
}

SyntheticTask generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.n;
  SyntheticTask task;

  auto latent_rng = stream(spec.seed, 1);
  const Matrix z = gaussian_matrix(latent_rng, n, spec.d_base);
  task.target = latent_target(z);

  auto view_rng = stream(spec.seed, 2);
  task.base = FeatureSet("G", z + gaussian_matrix(view_rng, n, spec.d_base, 1.0) * spec.noise_level);

  const std::size_t total = static_cast<std::size_t>(spec.train_pairs) +
                            static_cast<std::size_t>(spec.validation_pairs) +
                            static_cast<std::size_t>(spec.test_pairs);
  RankPairs all = pairs_from_scores(task.target, total, spec.seed ^ 0x5bd1e995ULL);
  if (all.size() < total) throw InvalidInput("generate_synthetic: not enough ordered pairs");
  auto cut = [&](std::size_t from, std::size_t count) {
    return RankPairs(all.begin() + static_cast<std::ptrdiff_t>(from),
                     all.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  task.train = cut(0, static_cast<std::size_t>(spec.train_pairs));
  task.validation = cut(task.train.size(), static_cast<std::size_t>(spec.validation_pairs));
  task.test = cut(task.train.size() + task.validation.size(),
                  static_cast<std::size_t>(spec.test_pairs));

  const LinearRanker ranker =
      select_linear_ranker(task.base, task.train, task.validation, spec.ranker_regs);
  task.ranker_reg = ranker.reg;
  task.initial = ranker.score(task.base.values);

  const Predictions scaled = min_max_scale(task.target);
  for (std::size_t i = 0; i < spec.gt_feature_noise.size(); ++i) {
    auto rng = stream(spec.seed, 100 + i);
    const double sd = spec.gt_feature_noise[i];
    Matrix values = scaled;
    if (sd > 0.0) values += gaussian_matrix(rng, n, 1, sd);
    task.features.emplace_back("ground_truth_" + std::to_string(i), std::move(values));
  }

  auto distractor_rng = stream(spec.seed, 3);
  std::uniform_int_distribution<int> dim(spec.distractor_min_dim, spec.distractor_max_dim);
  for (int i = 0; i < spec.distractors; ++i) {
    const int d = dim(distractor_rng);
    task.features.emplace_back("random_" + std::to_string(i),
                               gaussian_matrix(distractor_rng, n, d));
  }

  for (int i = 0; i < spec.fi_copies; ++i) {
    task.features.push_back(FeatureSet::from_predictions("initial_copy_" + std::to_string(i),
                                                          task.initial));
  }
  return task;
}

}  // namespace tupi
