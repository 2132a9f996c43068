#pragma once

// Interval partition of (0, t_max] by learnable cut points: the hard
// piecewise-constant event density, its sigmoid relaxation, closed-form
// survival integrals, and the Beta(1.5, 1.5) cut-point regularizer.
//
// Intervals are left-open/right-closed: I_j = (c_{j-1}, c_j], with c_0 = 0
// and c_{M+1} = t_max. Interval indices in this API are 0-based.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutsurv/errors.hpp"

namespace cutsurv {

class CutPoints {
 public:
  CutPoints(std::vector<double> interior, double t_max) : interior_(std::move(interior)), t_max_(t_max) {
    if (!(t_max_ > 0.0) || !std::isfinite(t_max_)) throw std::invalid_argument("t_max must be positive");
    double prev = 0.0;
    for (double c : interior_) {
      if (!(c > prev) || !std::isfinite(c)) {
        throw std::invalid_argument("cut points must be strictly increasing and positive");
      }
      prev = c;
    }
    if (!interior_.empty() && !(interior_.back() < t_max_)) {
      throw std::invalid_argument("cut points must lie below t_max");
    }
  }

  [[nodiscard]] std::size_t count() const { return interior_.size(); }
  [[nodiscard]] std::size_t interval_count() const { return interior_.size() + 1; }
  [[nodiscard]] const std::vector<double>& interior() const { return interior_; }
  [[nodiscard]] double t_max() const { return t_max_; }

  /// Boundary k for k in [0, M+1]: 0, c_1, ..., c_M, t_max.
  [[nodiscard]] double boundary(std::size_t k) const {
    if (k == 0) return 0.0;
    if (k > interior_.size()) return t_max_;
    return interior_[k - 1];
  }

  /// Last interior cut point, or t_max when there are none.
  [[nodiscard]] double last() const { return interior_.empty() ? t_max_ : interior_.back(); }

  friend bool operator==(const CutPoints&, const CutPoints&) = default;

 private:
  std::vector<double> interior_;
  double t_max_;
};

/// Probability mass over the M+1 intervals for one observation.
class IntervalProbabilities {
 public:
  explicit IntervalProbabilities(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw std::invalid_argument("interval probabilities must not be empty");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0)) throw std::invalid_argument("interval probabilities must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("interval probabilities must sum to 1");
  }

  [[nodiscard]] std::size_t size() const { return p_.size(); }
  [[nodiscard]] double operator[](std::size_t j) const { return p_[j]; }
  [[nodiscard]] const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow or underflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

inline void check_sizes(std::size_t probs, const CutPoints& cuts) {
  if (probs != cuts.interval_count()) {
    throw std::invalid_argument("expected " + std::to_string(cuts.interval_count()) +
                                " interval probabilities, got " + std::to_string(probs));
  }
}

/// softplus(u) - softplus(u - c) for c > 0, rewritten when both arguments are
/// large and positive so the difference does not cancel.
inline double softplus_gap(double u, double c) {
  if (u > c) return c + softplus(-u) - softplus(c - u);
  return softplus(u) - softplus(u - c);
}

}  // namespace detail

inline std::vector<double> interval_lengths(const CutPoints& cuts) {
  std::vector<double> out(cuts.interval_count());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = cuts.boundary(j + 1) - cuts.boundary(j);
  return out;
}

/// 0-based index of the interval containing t (right-closed intervals).
inline std::size_t interval_index(double t, const CutPoints& cuts) {
  if (!(t > 0.0 && t <= cuts.t_max())) {
    throw DomainError("time " + std::to_string(t) + " outside (0, t_max]");
  }
  const auto& c = cuts.interior();
  return static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), t) - c.begin());
}

inline double hard_density(double t, const IntervalProbabilities& probs, const CutPoints& cuts) {
  detail::check_sizes(probs.size(), cuts);
  const auto j = interval_index(t, cuts);
  return probs[j] / (cuts.boundary(j + 1) - cuts.boundary(j));
}

/// 1 - (masses of whole intervals before y) - (fraction of the interval holding y).
inline double hard_survival(double y, std::span<const double> probs, const CutPoints& cuts) {
  detail::check_sizes(probs.size(), cuts);
  const auto j = interval_index(y, cuts);
  double mass = 0.0;
  for (std::size_t k = 0; k < j; ++k) mass += probs[k];
  const double lo = cuts.boundary(j);
  const double hi = cuts.boundary(j + 1);
  mass += probs[j] * (y - lo) / (hi - lo);
  return std::clamp(1.0 - mass, 0.0, 1.0);
}

inline double hard_survival(double y, const IntervalProbabilities& probs, const CutPoints& cuts) {
  return hard_survival(y, std::span<const double>(probs.values()), cuts);
}

/// Soft interval indicators sigma((t - c_{j-1})/tau) * sigma((c_j - t)/tau).
inline std::vector<double> smooth_membership(double t, const CutPoints& cuts, double tau) {
  if (!(tau > 0.0)) throw DomainError("temperature must be positive");
  std::vector<double> out(cuts.interval_count());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = std::exp(detail::log_sigmoid((t - cuts.boundary(j)) / tau) +
                      detail::log_sigmoid((cuts.boundary(j + 1) - t) / tau));
  }
  return out;
}

/// Jacobian of smooth_membership w.r.t. the interior cut points, row-major
/// (M+1) x M: entry [j * M + k] = d membership_j / d c_{k+1}.
inline std::vector<double> smooth_membership_jacobian(double t, const CutPoints& cuts, double tau) {
  const auto m = smooth_membership(t, cuts, tau);
  const std::size_t M = cuts.count();
  std::vector<double> jac(m.size() * M, 0.0);
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double v = (t - cuts.boundary(j)) / tau;
    const double w = (cuts.boundary(j + 1) - t) / tau;
    if (j >= 1) jac[j * M + (j - 1)] = -m[j] * detail::sigmoid(-v) / tau;
    if (j < M) jac[j * M + j] = m[j] * detail::sigmoid(-w) / tau;
  }
  return jac;
}

inline double relaxed_density(double t, const IntervalProbabilities& probs, const CutPoints& cuts, double tau) {
  detail::check_sizes(probs.size(), cuts);
  const auto m = smooth_membership(t, cuts, tau);
  const auto len = interval_lengths(cuts);
  double out = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) out += probs[j] * m[j] / len[j];
  return out;
}

/// log of the relaxed density and its partial derivatives.
struct LogDensityTerms {
  double value = 0.0;
  std::vector<double> d_probs;  // d log p / d probs[j]
  std::vector<double> d_cuts;   // d log p / d c_k, interior cut points only
};

inline LogDensityTerms relaxed_log_density_terms(double t, std::span<const double> probs, const CutPoints& cuts,
                                                 double tau) {
  detail::check_sizes(probs.size(), cuts);
  const std::size_t J = cuts.interval_count();
  const std::size_t M = cuts.count();
  std::vector<double> log_terms(J), log_shape(J), sig_left(J), sig_right(J), len(J);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) {
    const double a = cuts.boundary(j);
    const double b = cuts.boundary(j + 1);
    len[j] = b - a;
    const double v = (t - a) / tau;
    const double w = (b - t) / tau;
    sig_left[j] = detail::sigmoid(-v);
    sig_right[j] = detail::sigmoid(-w);
    log_shape[j] = detail::log_sigmoid(v) + detail::log_sigmoid(w) - std::log(len[j]);
    log_terms[j] = std::log(probs[j]) + log_shape[j];
    top = std::max(top, log_terms[j]);
  }
  double acc = 0.0;
  for (double lt : log_terms) acc += std::exp(lt - top);
  LogDensityTerms out;
  out.value = top + std::log(acc);
  out.d_probs.resize(J);
  out.d_cuts.assign(M, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    out.d_probs[j] = std::exp(log_shape[j] - out.value);
    const double resp = std::exp(log_terms[j] - out.value);
    // c_j is the right edge of interval j-1 (0-based) and the left edge of interval j.
    if (j >= 1) out.d_cuts[j - 1] += resp * (-sig_left[j] / tau + 1.0 / len[j]);
    if (j < M) out.d_cuts[j] += resp * (sig_right[j] / tau - 1.0 / len[j]);
  }
  return out;
}

/// Integral over (0, y] of sigma((t-a)/tau) sigma((b-t)/tau) dt and its partials
/// in a and b, via sigma(u)sigma(c-u) = (sigma(u) - sigma(u-c)) / (1 - e^{-c})
/// whose antiderivative is a difference of softplus terms.
struct SoftIntervalIntegral {
  double value = 0.0;
  double d_left = 0.0;
  double d_right = 0.0;
};

inline SoftIntervalIntegral soft_interval_integral(double a, double b, double y, double tau) {
  const double c = (b - a) / tau;
  const double u0 = -a / tau;
  const double u1 = (y - a) / tau;
  double k = 1.0;
  double dk = 0.0;
  if (c <= 30.0) {
    k = -1.0 / std::expm1(-c);
    dk = -std::exp(-c) * k * k;
  }
  const double delta = detail::softplus_gap(u1, c) - detail::softplus_gap(u0, c);
  SoftIntervalIntegral out;
  out.value = tau * k * delta;
  out.d_right = dk * delta + k * (detail::sigmoid(u1 - c) - detail::sigmoid(u0 - c));
  out.d_left = -(dk * delta + k * (detail::sigmoid(u1) - detail::sigmoid(u0)));
  return out;
}

/// Relaxed survival before clamping, with partial derivatives.
struct SurvivalTerms {
  double value = 0.0;
  std::vector<double> d_probs;
  std::vector<double> d_cuts;
};

inline SurvivalTerms relaxed_survival_terms(double y, std::span<const double> probs, const CutPoints& cuts,
                                            double tau) {
  detail::check_sizes(probs.size(), cuts);
  if (!(tau > 0.0)) throw DomainError("temperature must be positive");
  const std::size_t J = cuts.interval_count();
  const std::size_t M = cuts.count();
  SurvivalTerms out;
  out.value = 1.0;
  out.d_probs.resize(J);
  out.d_cuts.assign(M, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double a = cuts.boundary(j);
    const double b = cuts.boundary(j + 1);
    const double len = b - a;
    const auto g = soft_interval_integral(a, b, y, tau);
    const double share = g.value / len;
    out.value -= probs[j] * share;
    out.d_probs[j] = -share;
    if (j >= 1) out.d_cuts[j - 1] -= probs[j] * (g.d_left + share) / len;
    if (j < M) out.d_cuts[j] -= probs[j] * (g.d_right - share) / len;
  }
  return out;
}

inline double relaxed_survival(double y, const IntervalProbabilities& probs, const CutPoints& cuts, double tau) {
  if (!(y > 0.0 && y <= cuts.t_max())) throw DomainError("time outside (0, t_max]");
  return std::clamp(relaxed_survival_terms(y, probs.values(), cuts, tau).value, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Cut-point regularizer

enum class RegularizerForm { LogPdf, Pdf };

/// Beta(1.5, 1.5) density: (8/pi) sqrt(u (1 - u)).
inline double beta15_pdf(double u) { return 8.0 / std::numbers::pi * std::sqrt(u * (1.0 - u)); }

inline double beta15_log_pdf(double u) {
  return std::log(8.0 / std::numbers::pi) + 0.5 * std::log(u) + 0.5 * std::log1p(-u);
}

struct RegularizerTerms {
  double value = 0.0;
  std::vector<double> d_cuts;
};

/// Sum over cut points of the Beta(1.5,1.5) (log-)density of each point's
/// relative position between its two neighbours. Larger is better centered.
inline RegularizerTerms beta_regularizer_terms(const CutPoints& cuts, RegularizerForm form = RegularizerForm::LogPdf) {
  const std::size_t M = cuts.count();
  if (M == 0) throw std::invalid_argument("regularizer needs at least one cut point");
  RegularizerTerms out;
  out.d_cuts.assign(M, 0.0);
  for (std::size_t k = 1; k <= M; ++k) {
    const double lo = cuts.boundary(k - 1);
    const double hi = cuts.boundary(k + 1);
    const double span = hi - lo;
    const double u = (cuts.boundary(k) - lo) / span;
    double value = 0.0;
    double slope = 0.5 / u - 0.5 / (1.0 - u);  // d log pdf / du
    if (form == RegularizerForm::LogPdf) {
      value = beta15_log_pdf(u);
    } else {
      value = beta15_pdf(u);
      slope *= value;
    }
    out.value += value;
    out.d_cuts[k - 1] += slope / span;
    if (k >= 2) out.d_cuts[k - 2] += slope * (-(1.0 - u) / span);
    if (k < M) out.d_cuts[k] += slope * (-u / span);
  }
  return out;
}

inline double beta_regularizer(const CutPoints& cuts, RegularizerForm form = RegularizerForm::LogPdf) {
  return beta_regularizer_terms(cuts, form).value;
}

/// Sorts, then sweeps left to right clamping each value into
/// [prev + min_gap, t_max - (remaining) * min_gap].
inline CutPoints project_cutpoints(std::vector<double> raw, double t_max, double min_gap) {
  const auto M = static_cast<double>(raw.size());
  if (!(min_gap > 0.0) || !(t_max > (M + 1.0) * min_gap)) {
    throw ConfigError("min_gap " + std::to_string(min_gap) + " is infeasible for " + std::to_string(raw.size()) +
                      " cut points below t_max " + std::to_string(t_max));
  }
  for (double v : raw) {
    if (!std::isfinite(v)) throw DomainError("non-finite cut point");
  }
  std::sort(raw.begin(), raw.end());
  double prev = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double lo = prev + min_gap;
    const double hi = t_max - static_cast<double>(raw.size() - i) * min_gap;
    raw[i] = std::min(std::max(raw[i], lo), hi);
    prev = raw[i];
  }
  return CutPoints(std::move(raw), t_max);
}

}  // namespace cutsurv
