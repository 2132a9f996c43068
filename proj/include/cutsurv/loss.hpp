#pragma once

// Censoring-aware negative log-likelihood under the relaxed density, the
// cut-point regularizer, and exact gradients of their combination.

#include <cmath>
#include <span>
#include <vector>

#include "cutsurv/dataset.hpp"
#include "cutsurv/network.hpp"
#include "cutsurv/partition.hpp"

namespace cutsurv {

/// Per-feature affine standardisation fitted on a training set.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler identity(std::size_t p) { return {std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)}; }

  static FeatureScaler fit(const SurvivalDataset& data) {
    const std::size_t p = data.feature_dim();
    FeatureScaler s{std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
    const auto n = static_cast<double>(data.size());
    for (const auto& r : data.records()) {
      for (std::size_t k = 0; k < p; ++k) s.mean[k] += r.features[k] / n;
    }
    for (std::size_t k = 0; k < p; ++k) {
      double ss = 0.0;
      for (const auto& r : data.records()) ss += (r.features[k] - s.mean[k]) * (r.features[k] - s.mean[k]);
      const double sd = std::sqrt(ss / n);
      s.scale[k] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }
};

/// Training examples in network-ready form.
struct Batch {
  Matrix x;  // B x p, already standardised
  std::vector<double> time;
  std::vector<int> event;

  [[nodiscard]] std::size_t size() const { return time.size(); }
};

inline Batch make_batch(const SurvivalDataset& data, std::span<const std::size_t> indices, const FeatureScaler& scaler) {
  Batch b;
  const auto p = static_cast<Eigen::Index>(data.feature_dim());
  b.x.resize(static_cast<Eigen::Index>(indices.size()), p);
  b.time.reserve(indices.size());
  b.event.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& rec = data[indices[r]];
    for (Eigen::Index k = 0; k < p; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      b.x(static_cast<Eigen::Index>(r), k) = (rec.features[ku] - scaler.mean[ku]) / scaler.scale[ku];
    }
    b.time.push_back(rec.observed_time);
    b.event.push_back(rec.event);
  }
  return b;
}

inline Batch make_batch(const SurvivalDataset& data, const FeatureScaler& scaler) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(data, all, scaler);
}

/// Floor applied to the survival probability of censored records.
inline constexpr double kSurvivalFloor = 1e-12;

struct LossOptions {
  double reg_strength = 0.0;  // lambda_1
  RegularizerForm form = RegularizerForm::LogPdf;
  bool include_regularizer = true;  // false for the fixed-cut baseline
};

struct LossResult {
  double loss = 0.0;  // nll - lambda_1 * H / M
  double nll = 0.0;   // batch mean
  std::size_t clamped = 0;  // censored records whose survival hit the floor
  GradientBundle grad;
};

namespace detail {

/// Per-record nll and its gradients w.r.t. the interval probabilities and cut points.
struct RecordLoss {
  double value = 0.0;
  bool clamped = false;
};

inline RecordLoss record_loss(double y, int event, std::span<const double> probs, const CutPoints& cuts, double tau,
                              std::span<double> d_probs, std::span<double> d_cuts) {
  if (event == 1) {
    const auto t = relaxed_log_density_terms(y, probs, cuts, tau);
    for (std::size_t j = 0; j < d_probs.size(); ++j) d_probs[j] = -t.d_probs[j];
    for (std::size_t k = 0; k < d_cuts.size(); ++k) d_cuts[k] = -t.d_cuts[k];
    return {-t.value, false};
  }
  const auto s = relaxed_survival_terms(y, probs, cuts, tau);
  if (s.value < kSurvivalFloor) {
    std::fill(d_probs.begin(), d_probs.end(), 0.0);
    std::fill(d_cuts.begin(), d_cuts.end(), 0.0);
    return {-std::log(kSurvivalFloor), true};
  }
  const double sv = std::min(s.value, 1.0);
  for (std::size_t j = 0; j < d_probs.size(); ++j) d_probs[j] = -s.d_probs[j] / sv;
  for (std::size_t k = 0; k < d_cuts.size(); ++k) d_cuts[k] = -s.d_cuts[k] / sv;
  return {-std::log(sv), false};
}

inline void check_times(const Batch& batch, const CutPoints& cuts) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  for (double y : batch.time) {
    if (!(y > 0.0 && y <= cuts.t_max())) throw DomainError("observed time outside (0, t_max]");
  }
}

}  // namespace detail

/// Mean over the batch of -[s log p(y) + (1 - s) log S(y)] under the relaxed model.
inline double nll(const Batch& batch, const MLPParams& params, const CutPoints& cuts, double tau,
                  std::size_t* clamped = nullptr) {
  detail::check_times(batch, cuts);
  const auto fwd = forward_batch(params, batch.x);
  const std::size_t J = cuts.interval_count();
  std::vector<double> dp(J), dc(cuts.count());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::span<const double> probs(fwd.probs.row(static_cast<Eigen::Index>(i)).data(), J);
    const auto r = detail::record_loss(batch.time[i], batch.event[i], probs, cuts, tau, dp, dc);
    total += r.value;
    if (clamped && r.clamped) ++*clamped;
  }
  return total / static_cast<double>(batch.size());
}

/// nll - lambda_1 * H(C) / M with exact gradients w.r.t. network parameters and cut points.
inline LossResult loss_and_gradient(const Batch& batch, const MLPParams& params, const CutPoints& cuts, double tau,
                                    const LossOptions& opt) {
  detail::check_times(batch, cuts);
  const auto fwd = forward_batch(params, batch.x);
  const std::size_t J = cuts.interval_count();
  const std::size_t M = cuts.count();
  const auto B = static_cast<double>(batch.size());

  LossResult out;
  Matrix d_probs(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(J));
  std::vector<double> cut_grad(M, 0.0);
  std::vector<double> dc(M);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const std::span<const double> probs(fwd.probs.row(row).data(), J);
    const std::span<double> dp(d_probs.row(row).data(), J);
    const auto r = detail::record_loss(batch.time[i], batch.event[i], probs, cuts, tau, dp, dc);
    out.nll += r.value;
    if (r.clamped) ++out.clamped;
    for (std::size_t k = 0; k < M; ++k) cut_grad[k] += dc[k];
  }
  out.nll /= B;
  d_probs /= B;
  for (double& g : cut_grad) g /= B;

  out.grad = backward(params, fwd, softmax_backward(fwd.probs, d_probs));
  out.loss = out.nll;
  if (opt.include_regularizer && opt.reg_strength != 0.0 && M > 0) {
    const auto reg = beta_regularizer_terms(cuts, opt.form);
    const double w = opt.reg_strength / static_cast<double>(M);
    out.loss -= w * reg.value;
    for (std::size_t k = 0; k < M; ++k) cut_grad[k] -= w * reg.d_cuts[k];
  }
  out.grad.cuts = std::move(cut_grad);
  return out;
}

inline double total_loss(const Batch& batch, const MLPParams& params, const CutPoints& cuts, double tau,
                         const LossOptions& opt) {
  double loss = nll(batch, params, cuts, tau);
  const std::size_t M = cuts.count();
  if (opt.include_regularizer && opt.reg_strength != 0.0 && M > 0) {
    loss -= opt.reg_strength * beta_regularizer(cuts, opt.form) / static_cast<double>(M);
  }
  return loss;
}

}  // namespace cutsurv
