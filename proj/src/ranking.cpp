#include "tupi/ranking.hpp"

#include <algorithm>
#include <random>

#include "tupi/error.hpp"

namespace tupi {
namespace {

void check_pairs(const Predictions& f, const RankPairs& pairs, const char* who) {
  if (pairs.empty()) throw InvalidInput(std::string(who) + ": no pairs");
  const auto n = static_cast<std::size_t>(f.size());
  for (const auto& p : pairs) {
    if (p.q >= n || p.r >= n) {
      throw InvalidInput(std::string(who) + ": pair index out of range");
    }
  }
}

}  // namespace

double rank_accuracy(const Predictions& f, const RankPairs& pairs) {
  check_pairs(f, pairs, "rank_accuracy");
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (f(static_cast<Eigen::Index>(p.q)) > f(static_cast<Eigen::Index>(p.r))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double hinge_rank_loss(const Predictions& f, const RankPairs& pairs) {
  check_pairs(f, pairs, "hinge_rank_loss");
  double loss = 0.0;
  for (const auto& p : pairs) {
    const double slack = 1.0 - (f(static_cast<Eigen::Index>(p.q)) - f(static_cast<Eigen::Index>(p.r)));
    if (slack > 0.0) loss += slack * slack;
  }
  return loss;
}

double hinge_rank_loss(const Predictions& f, const RankPairs& pairs, Vector& gradient) {
  check_pairs(f, pairs, "hinge_rank_loss");
  gradient = Vector::Zero(f.size());
  double loss = 0.0;
  for (const auto& p : pairs) {
    const auto q = static_cast<Eigen::Index>(p.q);
    const auto r = static_cast<Eigen::Index>(p.r);
    const double slack = 1.0 - (f(q) - f(r));
    if (slack > 0.0) {
      loss += slack * slack;
      gradient(q) -= 2.0 * slack;
      gradient(r) += 2.0 * slack;
    }
  }
  return loss;
}

LinearRanker train_linear_ranker(const FeatureSet& g, const RankPairs& pairs, double reg) {
  if (!(reg > 0.0)) throw InvalidInput("train_linear_ranker: reg must be positive");
  g.validate();
  check_pairs(Vector::Zero(g.rows()), pairs, "train_linear_ranker");

  // One row per pair: g_q - g_r, so margins are diff * w.
  Matrix diff(static_cast<Eigen::Index>(pairs.size()), g.dims());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    diff.row(static_cast<Eigen::Index>(i)) =
        g.values.row(static_cast<Eigen::Index>(pairs[i].q)) -
        g.values.row(static_cast<Eigen::Index>(pairs[i].r));
  }

  auto objective = [&](const Vector& w, Vector* grad) {
    const Vector slack = (1.0 - (diff * w).array()).max(0.0).matrix();
    if (grad) *grad = -2.0 * (diff.transpose() * slack) + 2.0 * reg * w;
    return slack.squaredNorm() + reg * w.squaredNorm();
  };

  Vector w = Vector::Zero(g.dims());
  Vector grad;
  double value = objective(w, &grad);
  double step = 1.0 / (static_cast<double>(pairs.size()) + reg);
  for (int it = 0; it < kRankerSteps; ++it) {
    if (grad.squaredNorm() == 0.0) break;
    bool accepted = false;
    for (int halving = 0; halving < 50; ++halving) {
      const Vector trial = w - step * grad;
      const double v = objective(trial, nullptr);
      if (v <= value) {
        w = trial;
        value = objective(w, &grad);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step *= 2.0;
  }
  return LinearRanker{std::move(w), reg};
}

RankPairs pairs_from_scores(const Predictions& y, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InvalidInput("pairs_from_scores: count must be positive");
  require_finite(y, "pairs_from_scores");
  const auto n = static_cast<std::size_t>(y.size());
  RankPairs all;
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t r = 0; r < n; ++r) {
      if (y(static_cast<Eigen::Index>(q)) > y(static_cast<Eigen::Index>(r))) {
        all.push_back({q, r});
      }
    }
  }
  if (all.empty()) throw NoOrderedPairs("pairs_from_scores: all scores are tied");
  const std::size_t take = std::min(count, all.size());
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `take` slots become a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(take);
  return all;
}

}  // namespace tupi
