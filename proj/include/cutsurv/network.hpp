#pragma once

// Two-layer classifier p(z | x): softmax(W2 relu(W1 x + b1) + b2), with
// hand-derived reverse-mode gradients.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cutsurv/errors.hpp"
#include "cutsurv/partition.hpp"
#include "cutsurv/random.hpp"

namespace cutsurv {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct MLPParams {
  Matrix w1;  // h x p
  Vector b1;  // h
  Matrix w2;  // (M+1) x h
  Vector b2;  // M+1

  [[nodiscard]] std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  [[nodiscard]] std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }
  [[nodiscard]] std::size_t output_dim() const { return static_cast<std::size_t>(w2.rows()); }

  [[nodiscard]] bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  friend bool operator==(const MLPParams& a, const MLPParams& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
  }
};

/// Gradient of a scalar loss w.r.t. every network tensor and every interior cut point.
struct GradientBundle {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  std::vector<double> cuts;

  static GradientBundle zeros_like(const MLPParams& p, std::size_t cut_count) {
    return {Matrix::Zero(p.w1.rows(), p.w1.cols()), Vector::Zero(p.b1.size()),
            Matrix::Zero(p.w2.rows(), p.w2.cols()), Vector::Zero(p.b2.size()),
            std::vector<double>(cut_count, 0.0)};
  }

  [[nodiscard]] bool all_finite() const {
    if (!(w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite())) return false;
    for (double c : cuts) {
      if (!std::isfinite(c)) return false;
    }
    return true;
  }
};

/// Weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)), biases zero.
inline MLPParams init_params(std::size_t p, std::size_t h, std::size_t m, std::uint64_t seed) {
  if (p < 1 || h < 1) throw std::invalid_argument("input and hidden dimensions must be >= 1");
  Rng rng(seed);
  MLPParams out;
  const auto P = static_cast<Eigen::Index>(p);
  const auto H = static_cast<Eigen::Index>(h);
  const auto J = static_cast<Eigen::Index>(m + 1);
  out.w1.resize(H, P);
  out.w2.resize(J, H);
  const double r1 = std::sqrt(1.0 / static_cast<double>(p));
  const double r2 = std::sqrt(1.0 / static_cast<double>(h));
  for (Eigen::Index i = 0; i < out.w1.size(); ++i) out.w1.data()[i] = (2.0 * rng.uniform() - 1.0) * r1;
  for (Eigen::Index i = 0; i < out.w2.size(); ++i) out.w2.data()[i] = (2.0 * rng.uniform() - 1.0) * r2;
  out.b1 = Vector::Zero(H);
  out.b2 = Vector::Zero(J);
  return out;
}

/// Intermediate values of a batched forward pass, kept for backward().
struct ForwardCache {
  Matrix inputs;      // B x p
  Matrix pre_hidden;  // B x h
  Matrix hidden;      // B x h
  Matrix probs;       // B x (M+1)
};

inline ForwardCache forward_batch(const MLPParams& params, Matrix inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != params.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(inputs.cols()) + " features, network expects " +
                                std::to_string(params.input_dim()));
  }
  if (!inputs.allFinite()) throw DomainError("non-finite network input");
  ForwardCache c;
  c.pre_hidden = (inputs * params.w1.transpose()).rowwise() + params.b1.transpose();
  c.hidden = c.pre_hidden.cwiseMax(0.0);
  Matrix logits = (c.hidden * params.w2.transpose()).rowwise() + params.b2.transpose();
  // log-sum-exp stabilised softmax; every entry stays strictly positive
  const Vector top = logits.rowwise().maxCoeff();
  logits.colwise() -= top;
  c.probs = logits.array().exp().matrix();
  const Vector norm = c.probs.rowwise().sum();
  for (Eigen::Index i = 0; i < c.probs.rows(); ++i) c.probs.row(i) /= norm(i);
  c.inputs = std::move(inputs);
  return c;
}

inline IntervalProbabilities forward(const MLPParams& params, std::span<const double> x) {
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = x[k];
  const auto c = forward_batch(params, std::move(row));
  return IntervalProbabilities(std::vector<double>(c.probs.data(), c.probs.data() + c.probs.cols()));
}

/// d loss / d probs -> d loss / d logits through the softmax Jacobian.
inline Matrix softmax_backward(const Matrix& probs, const Matrix& d_probs) {
  const Vector inner = probs.cwiseProduct(d_probs).rowwise().sum();
  return probs.cwiseProduct(d_probs.colwise() - inner);
}

/// Backpropagates d loss / d logits (B x (M+1)) into parameter gradients.
/// Cut-point gradients are left empty; the loss assembles those.
inline GradientBundle backward(const MLPParams& params, const ForwardCache& cache, const Matrix& d_logits) {
  GradientBundle g;
  g.w2 = d_logits.transpose() * cache.hidden;
  g.b2 = d_logits.colwise().sum().transpose();
  Matrix d_hidden = d_logits * params.w2;
  d_hidden = d_hidden.cwiseProduct((cache.pre_hidden.array() > 0.0).cast<double>().matrix());
  g.w1 = d_hidden.transpose() * cache.inputs;
  g.b1 = d_hidden.colwise().sum().transpose();
  return g;
}

}  // namespace cutsurv
