#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cutsurv/dataset.hpp"
#include "cutsurv/partition.hpp"

namespace cutsurv {

/// Product-limit survival estimate at each distinct event time.
struct KMCurve {
  std::vector<double> times;
  std::vector<double> survival;
  bool no_events = false;  // curve is identically 1

  /// Step-function value at t (right-continuous).
  [[nodiscard]] double at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

inline KMCurve kaplan_meier(const SurvivalDataset& data) {
  struct Obs {
    double time;
    int event;
  };
  std::vector<Obs> obs;
  obs.reserve(data.size());
  for (const auto& r : data.records()) obs.push_back({r.observed_time, r.event});
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

  KMCurve curve;
  double s = 1.0;
  std::size_t at_risk = obs.size();
  for (std::size_t i = 0; i < obs.size();) {
    const double t = obs[i].time;
    std::size_t deaths = 0;
    std::size_t here = 0;
    while (i < obs.size() && obs[i].time == t) {
      deaths += static_cast<std::size_t>(obs[i].event);
      ++here;
      ++i;
    }
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(s);
    }
    at_risk -= here;
  }
  curve.no_events = curve.times.empty();
  return curve;
}

struct QuantileCutResult {
  CutPoints cuts;
  std::vector<std::string> warnings;
};

/// m cut points where the KM curve first drops to levels 1 - k/(m+1).
/// Levels the curve never reaches are spread evenly between the last KM
/// time and t_max. Coinciding quantiles are separated by project_cutpoints
/// with the given min_gap (default 1e-3 * t_max).
inline QuantileCutResult km_quantile_cutpoints(const SurvivalDataset& data, std::size_t m, double min_gap = -1.0) {
  if (m < 1) throw std::invalid_argument("need at least one cut point");
  const double t_max = data.t_max();
  if (min_gap <= 0.0) min_gap = 1e-3 * t_max;
  const auto curve = kaplan_meier(data);

  std::vector<double> raw;
  std::size_t missing = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double level = 1.0 - static_cast<double>(k) / static_cast<double>(m + 1);
    const auto it = std::find_if(curve.survival.begin(), curve.survival.end(),
                                 [level](double s) { return s <= level + 1e-12; });
    if (it == curve.survival.end()) {
      ++missing;
    } else {
      raw.push_back(curve.times[static_cast<std::size_t>(it - curve.survival.begin())]);
    }
  }
  std::vector<std::string> warnings;
  if (missing > 0) {
    const double last = curve.times.empty() ? 0.0 : curve.times.back();
    for (std::size_t r = 1; r <= missing; ++r) {
      raw.push_back(last + (t_max - last) * static_cast<double>(r) / static_cast<double>(missing + 1));
    }
    warnings.push_back("Kaplan-Meier curve never reaches " + std::to_string(missing) +
                       " requested level(s); cut point(s) interpolated towards t_max");
  }
  return {project_cutpoints(std::move(raw), t_max, min_gap), std::move(warnings)};
}

}  // namespace cutsurv
