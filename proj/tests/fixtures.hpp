#pragma once

// Random instances shared by the metric unit tests and the acceptance run.

#include <cmath>
#include <vector>

#include "cutsurv/metrics.hpp"
#include "cutsurv/random.hpp"

namespace fixtures {

inline cutsurv::SurvivalDataset make_data(const std::vector<double>& time, const std::vector<int>& event,
                                          double t_max = 100.0) {
  std::vector<cutsurv::SurvivalRecord> r;
  for (std::size_t i = 0; i < time.size(); ++i) r.push_back({{0.0}, time[i], event[i]});
  return cutsurv::SurvivalDataset(std::move(r), t_max);
}

inline cutsurv::Matrix random_probs(cutsurv::Rng& rng, std::size_t n, std::size_t J, double spread = 2.0) {
  cutsurv::Matrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(J));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = std::exp(spread * rng.normal());
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct MetricInstance {
  std::vector<double> time;
  std::vector<int> event;
  cutsurv::SurvivalPredictions pred;
};

/// Random censored instance; times rounded to a coarse grid so ties occur,
/// and every seventh record repeats its predecessor's prediction.
inline MetricInstance random_metric_instance(cutsurv::Rng& rng, std::size_t n) {
  std::vector<double> raw(1 + rng.below(4));
  for (auto& c : raw) c = rng.uniform(5.0, 95.0);
  MetricInstance out{{}, {}, {random_probs(rng, n, raw.size() + 1), cutsurv::project_cutpoints(raw, 100, 5.0)}};
  for (std::size_t i = 0; i < n; ++i) {
    out.time.push_back(std::max(1.0, std::round(rng.uniform(0.0, 100.0) / 4.0) * 4.0));
    out.event.push_back(rng.uniform() < 0.6 ? 1 : 0);
  }
  for (Eigen::Index i = 1; i < out.pred.probs.rows(); i += 7) out.pred.probs.row(i) = out.pred.probs.row(i - 1);
  return out;
}

/// n records whose event times are drawn from the predicted hard model itself
/// (cuts 25/50/75, horizon 100), no censoring.
inline std::pair<cutsurv::SurvivalPredictions, cutsurv::SurvivalDataset> self_consistent_sample(cutsurv::Rng& rng,
                                                                                                std::size_t n) {
  const cutsurv::CutPoints cuts({25, 50, 75}, 100);
  cutsurv::SurvivalPredictions pred{random_probs(rng, n, 4, 1.0), cuts};
  std::vector<double> time;
  std::vector<int> event;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double u = rng.uniform();
    std::size_t j = 0;
    double acc = pred.probs(row, 0);
    while (u >= acc && j < 3) acc += pred.probs(row, static_cast<Eigen::Index>(++j));
    time.push_back(rng.uniform(cuts.boundary(j), cuts.boundary(j + 1)));
    event.push_back(1);
  }
  return {std::move(pred), make_data(time, event)};
}

}  // namespace fixtures
