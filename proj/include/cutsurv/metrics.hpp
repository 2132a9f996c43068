#pragma once

// Evaluation metrics on the hard piecewise-constant model: discrete-time
// (Antolini) concordance, AUC at the last cut point, and calibration slope
// and intercept by Poisson regression on predicted cumulative hazard.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cutsurv/dataset.hpp"
#include "cutsurv/errors.hpp"
#include "cutsurv/glm.hpp"
#include "cutsurv/network.hpp"
#include "cutsurv/partition.hpp"

namespace cutsurv {

/// Interval probabilities for every record of a dataset plus the partition
/// they refer to. Survival queries use the hard piecewise model.
struct SurvivalPredictions {
  Matrix probs;  // n x (M+1)
  CutPoints cuts;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(probs.rows()); }

  [[nodiscard]] double survival(std::size_t i, double t) const {
    return hard_survival(t, std::span<const double>(probs.row(static_cast<Eigen::Index>(i)).data(),
                                                     static_cast<std::size_t>(probs.cols())),
                         cuts);
  }
};

/// Model survival at every boundary c_1..c_{M+1}; rows are non-increasing.
inline Matrix risk_matrix(const SurvivalPredictions& pred) {
  const auto J = static_cast<Eigen::Index>(pred.cuts.interval_count());
  Matrix out(pred.probs.rows(), J);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    double s = 1.0;
    for (Eigen::Index j = 0; j < J; ++j) {
      s -= pred.probs(i, j);
      out(i, j) = std::clamp(s, 0.0, 1.0);
    }
  }
  return out;
}

struct Concordance {
  double value = 0.0;
  std::size_t pairs = 0;
};

/// Over pairs with s_i = 1 and y_i < y_j: credit 1 when S(y_i|x_i) < S(y_i|x_j),
/// 0.5 on an exact tie.
inline Concordance antolini_cindex(const SurvivalPredictions& pred, const SurvivalDataset& data) {
  if (pred.size() != data.size()) throw std::invalid_argument("prediction and dataset sizes differ");
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].observed_time < data[b].observed_time;
  });

  double score = 0.0;
  std::size_t pairs = 0;
  for (std::size_t oi = 0; oi < n; ++oi) {
    const std::size_t i = order[oi];
    if (data[i].event != 1) continue;
    const double yi = data[i].observed_time;
    const double own = pred.survival(i, yi);
    auto oj = oi + 1;
    while (oj < n && data[order[oj]].observed_time == yi) ++oj;
    for (; oj < n; ++oj) {
      const double other = pred.survival(order[oj], yi);
      ++pairs;
      if (own < other) {
        score += 1.0;
      } else if (own == other) {
        score += 0.5;
      }
    }
  }
  if (pairs == 0) throw UndefinedMetricError("concordance: no comparable pairs");
  return {score / static_cast<double>(pairs), pairs};
}

struct AucResult {
  double value = 0.0;
  std::size_t cases = 0;
  std::size_t controls = 0;
  std::size_t omitted = 0;  // censored at or before c_M
};

/// Cases: events at or before the last cut point. Controls: observed after it.
/// Score 1 - S(c_M|x); tie-corrected Mann-Whitney statistic.
inline AucResult auc_last_cutpoint(const SurvivalPredictions& pred, const SurvivalDataset& data) {
  if (pred.size() != data.size()) throw std::invalid_argument("prediction and dataset sizes differ");
  const double horizon = pred.cuts.last();
  struct Scored {
    double score;
    bool is_case;
  };
  std::vector<Scored> pool;
  AucResult out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const bool before = r.observed_time <= horizon;
    if (before && r.event == 0) {
      ++out.omitted;
      continue;
    }
    pool.push_back({1.0 - pred.survival(i, horizon), before});
    ++(before ? out.cases : out.controls);
  }
  if (out.cases == 0 || out.controls == 0) {
    throw UndefinedMetricError("AUC at last cut point: need at least one case and one control (cases " +
                               std::to_string(out.cases) + ", controls " + std::to_string(out.controls) + ")");
  }
  std::sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  double case_rank_sum = 0.0;
  for (std::size_t i = 0; i < pool.size();) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].score == pool[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (pool[k].is_case) case_rank_sum += mid_rank;
    }
    i = j;
  }
  const auto n1 = static_cast<double>(out.cases);
  const auto n0 = static_cast<double>(out.controls);
  out.value = (case_rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
  return out;
}

struct CalibrationResult {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t records = 0;
  std::size_t events = 0;
  std::size_t dropped = 0;  // non-positive predicted cumulative hazard
};

/// Poisson calibration. `exposure` is each record's predicted cumulative
/// hazard over its follow-up, `risk` its predicted cumulative hazard at the
/// horizon (a function of x only).
/// Intercept: log-link model with offset log exposure and no covariate.
/// Slope: coefficient b in log E[e] = a + b log risk + (log exposure - log risk).
inline CalibrationResult calibration_from_hazard(std::span<const double> events, std::span<const double> exposure,
                                                 std::span<const double> risk) {
  if (events.size() != exposure.size() || events.size() != risk.size()) {
    throw std::invalid_argument("calibration input sizes differ");
  }
  std::vector<double> e, log_e, log_r;
  CalibrationResult out;
  auto usable = [](double h) { return h > 0.0 && std::isfinite(h); };
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!usable(exposure[i]) || !usable(risk[i])) {
      ++out.dropped;
      continue;
    }
    e.push_back(events[i]);
    log_e.push_back(std::log(exposure[i]));
    log_r.push_back(std::log(risk[i]));
  }
  out.records = e.size();
  out.events = static_cast<std::size_t>(std::count(e.begin(), e.end(), 1.0));
  if (out.records < 10) {
    throw UndefinedMetricError("calibration: fewer than 10 records with positive predicted cumulative hazard");
  }
  const auto n = static_cast<Eigen::Index>(e.size());
  const Eigen::Map<const Eigen::VectorXd> y(e.data(), n);
  const Eigen::Map<const Eigen::VectorXd> le(log_e.data(), n);
  const Eigen::Map<const Eigen::VectorXd> lr(log_r.data(), n);
  const double mean = lr.mean();
  if ((lr.array() - mean).abs().maxCoeff() <= 1e-12 * std::max(1.0, std::abs(mean))) {
    throw UndefinedMetricError("calibration slope: predicted cumulative hazard has zero variance");
  }
  out.intercept = irls_poisson(Eigen::MatrixXd::Ones(n, 1), y, le)(0);
  Eigen::MatrixXd design(n, 2);
  design.col(0).setOnes();
  design.col(1) = lr;
  out.slope = irls_poisson(design, y, le - lr)(1);
  return out;
}

/// Calibration at horizon c_M. Follow-up is truncated at the horizon: each
/// record contributes the event indicator s = 1, y <= c_M, exposure
/// -log S(min(y, c_M) | x) and risk -log S(c_M | x).
inline CalibrationResult calibration(const SurvivalPredictions& pred, const SurvivalDataset& data) {
  if (pred.size() != data.size()) throw std::invalid_argument("prediction and dataset sizes differ");
  const double horizon = pred.cuts.last();
  std::vector<double> events(data.size()), exposure(data.size()), risk(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    events[i] = (r.event == 1 && r.observed_time <= horizon) ? 1.0 : 0.0;
    exposure[i] = -std::log(pred.survival(i, std::min(r.observed_time, horizon)));
    risk[i] = -std::log(pred.survival(i, horizon));
  }
  return calibration_from_hazard(events, exposure, risk);
}

/// All metrics for one model on one dataset. A metric that is undefined on
/// this data is left empty with its reason recorded.
struct MetricReport {
  std::optional<double> cindex;
  std::optional<double> auc_last;
  std::optional<double> calib_slope;
  std::optional<double> calib_intercept;
  std::size_t comparable_pairs = 0;
  std::size_t auc_cases = 0;
  std::size_t auc_controls = 0;
  std::size_t auc_omitted = 0;
  std::size_t calib_records = 0;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  [[nodiscard]] bool complete() const { return errors.empty(); }
};

inline MetricReport evaluate(const SurvivalPredictions& pred, const SurvivalDataset& data) {
  MetricReport rep;
  try {
    const auto c = antolini_cindex(pred, data);
    rep.cindex = c.value;
    rep.comparable_pairs = c.pairs;
  } catch (const Error& e) {
    rep.errors.push_back(std::string("cindex: ") + e.what());
  }
  try {
    const auto a = auc_last_cutpoint(pred, data);
    rep.auc_last = a.value;
    rep.auc_cases = a.cases;
    rep.auc_controls = a.controls;
    rep.auc_omitted = a.omitted;
  } catch (const Error& e) {
    rep.errors.push_back(std::string("auc_last: ") + e.what());
  }
  try {
    const auto cal = calibration(pred, data);
    rep.calib_slope = cal.slope;
    rep.calib_intercept = cal.intercept;
    rep.calib_records = cal.records;
  } catch (const Error& e) {
    rep.errors.push_back(std::string("calibration: ") + e.what());
  }
  return rep;
}

}  // namespace cutsurv
