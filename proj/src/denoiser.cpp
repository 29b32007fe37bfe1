#include "tupi/denoiser.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "tupi/error.hpp"
#include "tupi/ranking.hpp"

namespace tupi {
namespace {

constexpr int kMaxHalvings = 20;
constexpr double kMaxStep = 1.0;
// First-order decrease below this counts as a stationary point.
constexpr double kStationary = 1e-10;
constexpr double kCollapse = 1e-12;

bool collapsed(const Predictions& f) { return f.maxCoeff() - f.minCoeff() <= kCollapse; }

// With the bandwidth frozen, stretching f changes the objective, but the
// heuristic bandwidth of the next iteration undoes any stretch. Keep only
// the part of the gradient that changes the shape of f: drop the shift
// and scale directions.
Vector shape_component(const Vector& grad, const Predictions& f) {
  Vector g = grad.array() - grad.mean();
  const Vector u = f.array() - f.mean();
  const double uu = u.squaredNorm();
  if (uu > 0.0) g -= (u.dot(g) / uu) * u;
  return g;
}

}  // namespace

void DenoiseConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("DenoiseConfig: lambda must be non-negative");
  }
  if (!(sigma_w_sq > 0.0) || !std::isfinite(sigma_w_sq)) {
    throw InvalidInput("DenoiseConfig: sigma_w_sq must be positive");
  }
  if (max_iters < 0 || max_iters > 1000) {
    throw InvalidInput("DenoiseConfig: max_iters must lie in [0, 1000]");
  }
  if (rank < 2) throw InvalidInput("DenoiseConfig: rank must be at least 2");
  if (inner_steps < 1) throw InvalidInput("DenoiseConfig: inner_steps must be positive");
  if (!std::isfinite(step_size)) throw InvalidInput("DenoiseConfig: step_size must be finite");
}

double DenoiseConfig::initial_step(Eigen::Index n) const {
  if (step_size > 0.0) return step_size;
  return 0.1 / std::sqrt(static_cast<double>(n));
}

std::vector<double> weights_from_distances(std::span<const double> distances,
                                           double sigma_w_sq) {
  if (distances.empty()) throw InvalidInput("weights_from_distances: no features");
  if (!(sigma_w_sq > 0.0)) throw InvalidInput("weights_from_distances: sigma_w_sq must be positive");
  const double lo = *std::min_element(distances.begin(), distances.end());
  std::vector<double> w(distances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    w[i] = std::exp(-(distances[i] - lo) / sigma_w_sq);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> compute_weights(const CenteredEmbedding& f_embed,
                                    std::span<const CenteredEmbedding> feature_embeds,
                                    double sigma_w_sq) {
  std::vector<double> d;
  d.reserve(feature_embeds.size());
  for (const auto& e : feature_embeds) d.push_back(ambient_distance(f_embed, e));
  return weights_from_distances(d, sigma_w_sq);
}

double objective(const Predictions& f, double sigma_f_sq,
                 const CenteredEmbedding& snapshot_embed,
                 std::span<const CenteredEmbedding> feature_embeds,
                 std::span<const double> weights, double lambda) {
  if (feature_embeds.size() != weights.size()) {
    throw InvalidInput("objective: one weight per feature required");
  }
  const CenteredEmbedding fe = center_normalize(gaussian_kernel(Matrix(f), sigma_f_sq));
  double value = ambient_distance(fe, snapshot_embed);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    value += lambda * weights[i] * ambient_distance(fe, feature_embeds[i]);
  }
  return value;
}

FeatureBank::FeatureBank(std::span<const FeatureSet> features, KernelPath path,
                         Eigen::Index rank)
    : rank_(rank) {
  if (features.empty()) throw InvalidInput("FeatureBank: at least one feature set required");
  rows_ = features.front().rows();
  path_ = resolve_path(path, rows_, rank);
  kernels_.reserve(features.size());
  for (const auto& fs : features) {
    fs.validate();
    if (fs.rows() != rows_) {
      throw InvalidInput("FeatureBank: feature set '" + fs.name + "' has " +
                         std::to_string(fs.rows()) + " rows, expected " +
                         std::to_string(rows_));
    }
    kernels_.push_back(CenteredKernel::from_features(fs.values, path_, rank));
  }
}

StepObjective::StepObjective(const FeatureBank& bank, const Predictions& snapshot,
                             const DenoiseConfig& config, const Penalty& penalty)
    : penalty_(penalty),
      kernel_(PredictionKernel::for_snapshot(snapshot, bank.path(), bank.rank())),
      snapshot_(kernel_.freeze(snapshot)) {
  std::vector<DependenceTarget> probe;
  probe.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) probe.push_back({&bank.kernel(i), 1.0});
  const DependenceEvaluation at_snapshot = kernel_.evaluate(snapshot, probe);
  distances_.reserve(bank.size());
  for (double rho : at_snapshot.similarity) distances_.push_back(1.0 - rho);
  weights_ = weights_from_distances(distances_, config.sigma_w_sq);

  targets_.push_back({&snapshot_, 1.0});
  for (std::size_t i = 0; i < bank.size(); ++i) {
    targets_.push_back({&bank.kernel(i), config.lambda * weights_[i]});
  }
}

double StepObjective::value(const Predictions& f) const {
  double v = kernel_.evaluate(f, targets_).value;
  if (penalty_) v += penalty_(f, nullptr);
  return v;
}

double StepObjective::value(const Predictions& f, Vector& gradient) const {
  double v = kernel_.evaluate(f, targets_, &gradient).value;
  if (penalty_) {
    Vector extra;
    v += penalty_(f, &extra);
    gradient += extra;
  }
  return v;
}

Denoiser::Denoiser(std::shared_ptr<const FeatureBank> bank, DenoiseConfig config,
                   Penalty penalty)
    : bank_(std::move(bank)), config_(config), penalty_(std::move(penalty)) {
  if (!bank_) throw InvalidInput("Denoiser: missing feature bank");
  config_.validate();
}

StepObjective Denoiser::objective_at(const Predictions& snapshot) const {
  return StepObjective(*bank_, snapshot, config_, penalty_);
}

DenoiseState Denoiser::initial_state(const Predictions& f_initial) const {
  if (f_initial.size() != bank_->rows()) {
    throw InvalidInput("Denoiser: predictions length does not match features");
  }
  require_finite(f_initial, "Denoiser: initial predictions");
  DenoiseState s;
  s.current = f_initial;
  s.step = config_.initial_step(f_initial.size());
  return s;
}

DenoiseState Denoiser::step(const DenoiseState& state) const {
  DenoiseState next = state;
  next.t = state.t + 1;
  next.accepted_steps = 0;
  next.stalled = false;

  const Predictions& start = state.current;
  std::optional<StepObjective> obj;
  try {
    obj.emplace(*bank_, start, config_, penalty_);
  } catch (const DegenerateScale&) {
    next.stalled = true;
    return next;
  } catch (const DegenerateEmbedding&) {
    next.stalled = true;
    return next;
  }
  next.weights = obj->weights();

  const double spread = (start.array() - start.mean()).matrix().norm();
  Predictions f = start;
  Vector grad;
  double value = obj->value(f, grad);
  next.objective_before = value;
  double eta = state.step > 0.0 ? state.step : config_.initial_step(start.size());

  for (int s = 0; s < config_.inner_steps; ++s) {
    const Vector shape = shape_component(grad, f);
    const double gnorm = shape.norm();
    if (!(gnorm * spread > kStationary)) break;
    const Vector direction = (spread / gnorm) * shape;
    bool accepted = false;
    bool abort = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      const Predictions trial = f - eta * direction;
      if (collapsed(trial)) {
        abort = true;
        break;
      }
      double trial_value = 0.0;
      try {
        trial_value = obj->value(trial);
      } catch (const DegenerateEmbedding&) {
        eta *= 0.5;
        continue;
      }
      if (trial_value <= value) {
        f = trial;
        value = obj->value(f, grad);
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (abort) break;
    if (!accepted) {
      if (next.accepted_steps == 0) next.stalled = true;
      eta = state.step > 0.0 ? state.step : config_.initial_step(start.size());
      break;
    }
    ++next.accepted_steps;
    eta = std::min(2.0 * eta, kMaxStep);
  }

  next.current = f;
  next.objective_after = value;
  next.step = eta;
  return next;
}

DenoiseReport Denoiser::run(const Predictions& f_initial, const RankPairs& validation) const {
  if (validation.empty()) throw InvalidInput("Denoiser::run: validation pairs required");
  DenoiseState state = initial_state(f_initial);
  state.validation_accuracy = rank_accuracy(f_initial, validation);

  DenoiseReport report;
  report.final = f_initial;
  report.accuracy_trace.push_back(state.validation_accuracy);
  double best = state.validation_accuracy;

  for (int it = 0; it < config_.max_iters; ++it) {
    DenoiseState next = step(state);
    ++report.iterations_run;
    report.weight_trace.push_back(next.weights);
    next.validation_accuracy = rank_accuracy(next.current, validation);
    report.accuracy_trace.push_back(next.validation_accuracy);
    if (!(next.validation_accuracy > best)) break;
    best = next.validation_accuracy;
    report.final = next.current;
    report.best_iteration = next.t;
    state = std::move(next);
  }
  return report;
}

DenoiseReport run(const Predictions& f_initial, std::span<const FeatureSet> features,
                  const DenoiseConfig& config, const RankPairs& validation,
                  const Penalty& penalty) {
  config.validate();
  auto bank = std::make_shared<const FeatureBank>(features, config.path, config.rank);
  return Denoiser(std::move(bank), config, penalty).run(f_initial, validation);
}

std::vector<GridCell> default_grid() {
  const double values[] = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<GridCell> grid;
  for (double l : values) {
    for (double s : values) grid.push_back({l, s});
  }
  return grid;
}

TuneResult tune(const Predictions& f_initial, std::shared_ptr<const FeatureBank> bank,
                const RankPairs& validation, std::span<const GridCell> grid,
                const DenoiseConfig& base, unsigned threads, const Penalty& penalty) {
  if (grid.empty()) throw InvalidInput("tune: empty grid");
  const std::size_t cells = grid.size();
  std::vector<DenoiseReport> reports(cells);
  std::vector<std::exception_ptr> errors(cells);

  auto run_cell = [&](std::size_t i) {
    try {
      DenoiseConfig cfg = base;
      cfg.lambda = grid[i].lambda;
      cfg.sigma_w_sq = grid[i].sigma_w_sq;
      reports[i] = Denoiser(bank, cfg, penalty).run(f_initial, validation);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells; i = next++) run_cell(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  auto acc = [&](std::size_t i) {
    return reports[i].accuracy_trace[static_cast<std::size_t>(reports[i].best_iteration)];
  };
  for (std::size_t i = 1; i < cells; ++i) {
    const double a = acc(i);
    const double b = acc(best);
    if (a > b ||
        (a == b && (grid[i].lambda < grid[best].lambda ||
                    (grid[i].lambda == grid[best].lambda &&
                     grid[i].sigma_w_sq < grid[best].sigma_w_sq)))) {
      best = i;
    }
  }

  TuneResult out;
  out.config = base;
  out.config.lambda = grid[best].lambda;
  out.config.sigma_w_sq = grid[best].sigma_w_sq;
  out.validation_accuracy = acc(best);
  out.report = std::move(reports[best]);
  out.cell_index = best;
  return out;
}

TuneResult tune(const Predictions& f_initial, std::span<const FeatureSet> features,
                const RankPairs& validation, std::span<const GridCell> grid,
                const DenoiseConfig& base, unsigned threads) {
  base.validate();
  auto bank = std::make_shared<const FeatureBank>(features, base.path, base.rank);
  return tune(f_initial, std::move(bank), validation, grid, base, threads);
}

}  // namespace tupi
