#pragma once

// Synthetic cohorts with known cut points. Features come from the
// interleaving half-moon construction; each moon is a cluster whose event
// times are confined to one interval of (0, 100).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cutsurv/dataset.hpp"
#include "cutsurv/random.hpp"

namespace cutsurv {

struct SimulationOptions {
  double noise = 0.1;        // isotropic Gaussian noise on moon coordinates
  double pair_offset = 4.0;  // x-shift of the second moon pair (four-interval generator)
};

struct SimulatedData {
  SurvivalDataset dataset;
  std::vector<double> true_cuts;
  // Latent draws; never stored on the records themselves.
  std::vector<double> latent_event;
  std::vector<double> latent_censor;
  std::vector<int> cluster;  // 0-based
};

inline constexpr double kSimulationHorizon = 100.0;

namespace detail {

/// n points on one of the two moons, sklearn make_moons geometry: the upper
/// arc (cos t, sin t) and the lower arc (1 - cos t, 0.5 - sin t), t in [0, pi].
inline std::vector<std::array<double, 2>> moon(std::size_t n, bool lower, double dx, double noise, Rng& rng) {
  std::vector<std::array<double, 2>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    double x = std::cos(t);
    double y = std::sin(t);
    if (lower) {
      x = 1.0 - x;
      y = 0.5 - y;
    }
    out[i] = {x + dx + noise * rng.normal(), y + noise * rng.normal()};
  }
  return out;
}

}  // namespace detail

/// CDF of Beta(1.5, 1.5). With u = sin^2(theta) it reduces to
/// (2/pi)(theta - sin(4 theta)/4).
inline double beta15_cdf(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double theta = std::asin(std::sqrt(u));
  return 2.0 / std::numbers::pi * (theta - std::sin(4.0 * theta) / 4.0);
}

/// Inverse CDF of Beta(1.5, 1.5) by safeguarded Newton on theta.
inline double beta15_quantile(double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0;
  double hi = std::numbers::pi / 2.0;
  double theta = std::numbers::pi / 4.0;
  for (int it = 0; it < 100; ++it) {
    const double f = 2.0 / std::numbers::pi * (theta - std::sin(4.0 * theta) / 4.0) - p;
    if (f > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    const double df = 4.0 / std::numbers::pi * std::pow(std::sin(2.0 * theta), 2);
    double next = df > 0.0 ? theta - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - theta) < 1e-15) {
      theta = next;
      break;
    }
    theta = next;
  }
  const double s = std::sin(theta);
  return s * s;
}

namespace detail {

inline SimulatedData assemble(std::vector<std::array<double, 2>> features, std::vector<int> cluster,
                              std::vector<double> latent_event, Rng& censor_rng, std::vector<double> true_cuts) {
  const std::size_t n = features.size();
  std::vector<double> latent_censor(n);
  std::vector<SurvivalRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    latent_censor[i] = censor_rng.uniform(0.0, kSimulationHorizon);
    records[i].features = {features[i][0], features[i][1]};
    records[i].observed_time = std::min(latent_event[i], latent_censor[i]);
    records[i].event = latent_event[i] < latent_censor[i] ? 1 : 0;
  }
  return SimulatedData{SurvivalDataset(std::move(records), kSimulationHorizon), std::move(true_cuts),
                       std::move(latent_event), std::move(latent_censor), std::move(cluster)};
}

}  // namespace detail

/// Two moons of n/2 points. Cluster 0 events ~ U(0, 67], cluster 1 ~ U(67, 100);
/// censoring ~ U(0, 100). True cut point 67.
inline SimulatedData simulate_two_interval(std::size_t n, std::uint64_t seed, const SimulationOptions& opt = {}) {
  if (n < 2) throw std::invalid_argument("two-interval simulation needs n >= 2");
  if (n % 2 != 0) throw std::invalid_argument("two-interval simulation needs even n");
  Rng feature_rng(derive_seed(seed, 1));
  Rng event_rng(derive_seed(seed, 2));
  Rng censor_rng(derive_seed(seed, 3));

  const std::size_t half = n / 2;
  auto features = detail::moon(half, false, 0.0, opt.noise, feature_rng);
  const auto lower = detail::moon(half, true, 0.0, opt.noise, feature_rng);
  features.reserve(n);
  for (const auto& f : lower) features.push_back(f);

  std::vector<int> cluster(n);
  std::vector<double> latent_event(n);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = i < half ? 0 : 1;
    // uniform_open() is in (0,1): 67 * (1 - u) covers (0, 67), 67 + 33u covers (67, 100).
    const double u = event_rng.uniform_open();
    latent_event[i] = cluster[i] == 0 ? 67.0 * (1.0 - u) : 67.0 + 33.0 * u;
  }
  return detail::assemble(std::move(features), std::move(cluster), std::move(latent_event), censor_rng, {67.0});
}

/// Four clusters of n/4 points: two moon pairs, the second shifted along x.
/// Event times are Beta(1.5,1.5) variates scaled into (0,10], (10,30],
/// (30,70], (70,100) by cluster; censoring ~ U(0, 100). True cuts 10, 30, 70.
inline SimulatedData simulate_four_interval(std::size_t n, std::uint64_t seed, const SimulationOptions& opt = {}) {
  if (n < 4) throw std::invalid_argument("four-interval simulation needs n >= 4");
  if (n % 4 != 0) throw std::invalid_argument("four-interval simulation needs n divisible by 4");
  Rng feature_rng(derive_seed(seed, 1));
  Rng event_rng(derive_seed(seed, 2));
  Rng censor_rng(derive_seed(seed, 3));

  const std::size_t quarter = n / 4;
  std::vector<std::array<double, 2>> features;
  features.reserve(n);
  for (int k = 0; k < 4; ++k) {
    const auto part = detail::moon(quarter, k % 2 == 1, k >= 2 ? opt.pair_offset : 0.0, opt.noise, feature_rng);
    for (const auto& f : part) features.push_back(f);
  }

  constexpr std::array<double, 5> edges{0.0, 10.0, 30.0, 70.0, 100.0};
  std::vector<int> cluster(n);
  std::vector<double> latent_event(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i / quarter);
    cluster[i] = static_cast<int>(k);
    const double x = beta15_quantile(event_rng.uniform_open());
    latent_event[i] = edges[k] + (edges[k + 1] - edges[k]) * x;
  }
  return detail::assemble(std::move(features), std::move(cluster), std::move(latent_event), censor_rng,
                          {10.0, 30.0, 70.0});
}

}  // namespace cutsurv
