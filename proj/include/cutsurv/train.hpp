#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cutsurv/dataset.hpp"
#include "cutsurv/kaplan_meier.hpp"
#include "cutsurv/loss.hpp"
#include "cutsurv/network.hpp"
#include "cutsurv/partition.hpp"
#include "cutsurv/random.hpp"

namespace cutsurv {

enum class TrainMode { Learned, Baseline };

inline const char* to_string(TrainMode m) { return m == TrainMode::Learned ? "learned" : "baseline"; }

inline TrainMode parse_mode(const std::string& s) {
  if (s == "learned") return TrainMode::Learned;
  if (s == "baseline") return TrainMode::Baseline;
  throw ConfigError("unknown mode '" + s + "' (expected learned|baseline)");
}

struct TrainConfig {
  std::size_t m = 1;  // interior cut points
  std::size_t hidden = 32;
  double lr = 0.01;
  double weight_decay = 0.0;  // lambda_2, decoupled, weights only
  double reg_strength = 1.0;  // lambda_1
  RegularizerForm reg_form = RegularizerForm::LogPdf;
  std::size_t batch_size = 64;
  std::size_t epochs = 250;
  // Temperature schedule; unset values scale with t_max (1e-3, 1e-5 of it).
  std::optional<double> tau_init;
  std::optional<double> tau_floor;
  double tau_factor = 0.5;
  std::size_t patience = 10;
  double improvement = 1e-4;
  std::optional<double> min_gap;  // default 1e-3 * t_max
  double cut_lr_scale = 1.0;      // multiplies lr for cut points; 0 freezes them
  std::vector<double> initial_cuts;  // empty: Kaplan-Meier quantiles of the training set
  bool standardize = true;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Learned;

  /// Throws ConfigError on violated invariants.
  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (weight_decay < 0.0 || reg_strength < 0.0) throw ConfigError("regularisation strengths must be >= 0");
    if (!(tau_factor > 0.0 && tau_factor < 1.0)) throw ConfigError("tau_factor must lie in (0, 1)");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (cut_lr_scale < 0.0) throw ConfigError("cut_lr_scale must be >= 0");
    if (tau_init && !(*tau_init > 0.0)) throw ConfigError("tau_init must be positive");
    if (tau_floor && !(*tau_floor > 0.0)) throw ConfigError("tau_floor must be positive");
    if (tau_init && tau_floor && *tau_floor > *tau_init) throw ConfigError("tau_floor exceeds tau_init");
    if (!initial_cuts.empty() && initial_cuts.size() != m) {
      throw ConfigError("initial_cuts must hold exactly m values");
    }
  }

  /// Copy with every data-scaled default filled in for horizon t_max.
  [[nodiscard]] TrainConfig resolved(double t_max) const {
    TrainConfig c = *this;
    if (!c.tau_init) c.tau_init = 1e-3 * t_max;
    if (!c.tau_floor) c.tau_floor = std::min(1e-5 * t_max, *c.tau_init);
    if (!c.min_gap) c.min_gap = 1e-3 * t_max;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Adam with decoupled weight decay

struct AdamState {
  GradientBundle first;
  GradientBundle second;
  std::uint64_t step = 0;

  static AdamState zeros_like(const MLPParams& p, std::size_t cut_count) {
    return {GradientBundle::zeros_like(p, cut_count), GradientBundle::zeros_like(p, cut_count), 0};
  }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

namespace detail {

template <typename T>
void adam_update(T& value, const T& grad, T& m1, T& m2, double lr, double c1, double c2) {
  m1 = kAdamBeta1 * m1 + (1.0 - kAdamBeta1) * grad;
  m2 = kAdamBeta2 * m2 + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
  value -= (lr * (m1 / c1).array() / ((m2 / c2).array().sqrt() + kAdamEps)).matrix();
}

}  // namespace detail

/// One Adam step. Weight decay shrinks w1 and w2 by (1 - lr * lambda_2)
/// before the moment update; biases and cut points are not decayed.
/// In baseline mode the cut points and their moments are untouched.
inline CutPoints adam_step(MLPParams& params, const CutPoints& cuts, const GradientBundle& grads, AdamState& state,
                           const TrainConfig& config) {
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient", -1, -1);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  const double lr = config.lr;
  if (config.weight_decay > 0.0) {
    params.w1 *= 1.0 - lr * config.weight_decay;
    params.w2 *= 1.0 - lr * config.weight_decay;
  }
  detail::adam_update(params.w1, grads.w1, state.first.w1, state.second.w1, lr, c1, c2);
  detail::adam_update(params.b1, grads.b1, state.first.b1, state.second.b1, lr, c1, c2);
  detail::adam_update(params.w2, grads.w2, state.first.w2, state.second.w2, lr, c1, c2);
  detail::adam_update(params.b2, grads.b2, state.first.b2, state.second.b2, lr, c1, c2);
  if (config.mode == TrainMode::Baseline) return cuts;

  std::vector<double> raw = cuts.interior();
  const double cut_lr = lr * config.cut_lr_scale;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    double& m1 = state.first.cuts[k];
    double& m2 = state.second.cuts[k];
    const double g = grads.cuts[k];
    m1 = kAdamBeta1 * m1 + (1.0 - kAdamBeta1) * g;
    m2 = kAdamBeta2 * m2 + (1.0 - kAdamBeta2) * g * g;
    raw[k] -= cut_lr * (m1 / c1) / (std::sqrt(m2 / c2) + kAdamEps);
  }
  const double gap = config.min_gap.value_or(1e-3 * cuts.t_max());
  return project_cutpoints(std::move(raw), cuts.t_max(), gap);
}

/// Temperature schedule. `history` holds the validation losses observed since
/// the last temperature change. An epoch stalls when its loss does not beat
/// every earlier entry by `improvement`; the first entry has nothing to beat
/// and stalls. After `patience` trailing stalls the temperature is multiplied
/// by tau_factor, clamped at tau_floor.
inline double anneal_tau(std::span<const double> history, double tau, const TrainConfig& config) {
  const double floor = config.tau_floor.value_or(0.0);
  if (history.size() < config.patience) return tau;
  std::size_t stalls = 0;
  double best = std::numeric_limits<double>::infinity();
  for (double v : history) {
    if (v < best - config.improvement) {
      stalls = best == std::numeric_limits<double>::infinity() ? 1 : 0;
    } else {
      ++stalls;
    }
    best = std::min(best, v);
  }
  if (stalls < config.patience) return tau;
  return std::max(tau * config.tau_factor, floor);
}

// ---------------------------------------------------------------------------
// Training

struct EpochTrace {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean nll over the epoch's mini-batches
  double val_loss = 0.0;    // nll on the validation set after the epoch
  double tau = 0.0;         // temperature used during the epoch
  std::vector<double> cuts; // interior cut points after the epoch
};

struct FittedModel {
  MLPParams params;
  CutPoints cuts;
  FeatureScaler scaler;
  TrainConfig config;  // resolved
  CutPoints initial_cuts;
  double final_tau = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochTrace> trace;
  std::size_t clamped_survival = 0;
  std::uint64_t train_fingerprint = 0;
  std::vector<std::string> warnings;

  /// Interval probabilities for each record, row-major n x (M+1).
  [[nodiscard]] Matrix predict(const SurvivalDataset& data) const {
    return forward_batch(params, make_batch(data, scaler).x).probs;
  }
};

/// Divergence during training; carries the trace up to the failure.
struct TrainingDiverged : DivergenceError {
  TrainingDiverged(const std::string& what, int epoch, int batch, std::vector<EpochTrace> trace)
      : DivergenceError(what, epoch, batch), trace(std::move(trace)) {}
  std::vector<EpochTrace> trace;
};

/// Trains the classifier and, in learned mode, the cut points. Both modes
/// start from Kaplan-Meier quantile cut points of the training set unless
/// config.initial_cuts is given. Returns
/// the parameters from the epoch with the lowest validation loss.
inline FittedModel train(const TrainConfig& raw_config, const SurvivalDataset& train_set,
                         const SurvivalDataset& val_set) {
  if (train_set.feature_dim() != val_set.feature_dim()) {
    throw std::invalid_argument("train and validation feature dimensions differ");
  }
  const double t_max = std::max(train_set.t_max(), val_set.t_max());
  const TrainConfig config = raw_config.resolved(t_max);

  const auto scaler = config.standardize ? FeatureScaler::fit(train_set) : FeatureScaler::identity(train_set.feature_dim());
  const Batch val = make_batch(val_set, scaler);
  auto km = km_quantile_cutpoints(train_set, config.m, *config.min_gap);
  CutPoints cuts = project_cutpoints(config.initial_cuts.empty() ? km.cuts.interior() : config.initial_cuts, t_max,
                                     *config.min_gap);
  MLPParams params = init_params(train_set.feature_dim(), config.hidden, config.m, derive_seed(config.seed, 11));
  AdamState state = AdamState::zeros_like(params, config.m);

  const LossOptions loss_opt{config.reg_strength, config.reg_form, config.mode == TrainMode::Learned};
  double tau = *config.tau_init;

  FittedModel best{params, cuts, scaler, config, cuts, tau, 0, {}, 0, fingerprint(train_set), km.warnings};
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, 21, epoch));
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const Batch batch = make_batch(train_set, std::span(order).subspan(start, stop - start), scaler);
      auto result = loss_and_gradient(batch, params, cuts, tau, loss_opt);
      best.clamped_survival += result.clamped;
      if (!std::isfinite(result.loss) || !result.grad.all_finite()) {
        throw TrainingDiverged("non-finite loss or gradient", static_cast<int>(epoch), static_cast<int>(batch_no),
                               best.trace);
      }
      loss_sum += result.nll * static_cast<double>(batch.size());
      cuts = adam_step(params, cuts, result.grad, state, config);
      if (!params.all_finite()) {
        throw TrainingDiverged("non-finite parameters", static_cast<int>(epoch), static_cast<int>(batch_no),
                               best.trace);
      }
    }
    const double val_loss = nll(val, params, cuts, tau);
    if (!std::isfinite(val_loss)) {
      throw TrainingDiverged("non-finite validation loss", static_cast<int>(epoch), -1, best.trace);
    }
    best.trace.push_back({epoch, loss_sum / static_cast<double>(order.size()), val_loss, tau, cuts.interior()});
    if (val_loss < best_val) {
      best_val = val_loss;
      best.params = params;
      best.cuts = cuts;
      best.best_epoch = epoch;
    }
    history.push_back(val_loss);
    const double next = anneal_tau(history, tau, config);
    if (next != tau) {
      tau = next;
      history.clear();
    }
  }
  best.final_tau = tau;
  return best;
}

}  // namespace cutsurv
