#pragma once

// Grid search with repeated random 75/15/10 resplits. Every configuration
// sees the same splits; selection is by mean validation concordance and only
// the winner is scored on the test parts.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cutsurv/dataset.hpp"
#include "cutsurv/metrics.hpp"
#include "cutsurv/train.hpp"

namespace cutsurv {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  std::size_t n = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd out;
  out.n = xs.size();
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

struct CvOptions {
  std::size_t folds = 5;
  SplitFractions fractions{};
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct FoldOutcome {
  std::optional<FittedModel> model;
  double val_cindex = 0.0;  // 0 when the cell failed
  std::optional<std::string> error;
};

struct ConfigSummary {
  TrainConfig config;
  MeanStd val_cindex;
  std::size_t failed_folds = 0;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  std::vector<ConfigSummary> summaries;  // grid order
  std::vector<FoldOutcome> winner_folds;
  std::vector<MetricReport> winner_test;  // one per fold
};

/// Seed of the data split for one fold; shared by every configuration.
inline std::uint64_t fold_split_seed(std::uint64_t seed, std::size_t fold) { return derive_seed(seed, 31, fold); }

inline FoldOutcome run_fold(const TrainConfig& base, const DataSplit& split, std::size_t fold) {
  FoldOutcome out;
  try {
    TrainConfig cfg = base;
    cfg.seed = derive_seed(base.seed, 41, fold);
    auto model = train(cfg, split.train, split.val);
    const SurvivalPredictions pred{model.predict(split.val), model.cuts};
    out.val_cindex = antolini_cindex(pred, split.val).value;
    out.model = std::move(model);
  } catch (const std::exception& e) {
    out.error = e.what();
    out.val_cindex = 0.0;
  }
  return out;
}

inline GridSearchResult grid_search_cv(const std::vector<TrainConfig>& grid, const SurvivalDataset& data,
                                       const CvOptions& opt = {}) {
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  if (opt.folds < 1) throw std::invalid_argument("need at least one fold");
  std::vector<DataSplit> splits;
  splits.reserve(opt.folds);
  for (std::size_t f = 0; f < opt.folds; ++f) splits.push_back(split(data, opt.fractions, fold_split_seed(opt.seed, f)));

  const std::size_t cells = grid.size() * opt.folds;
  std::vector<FoldOutcome> outcomes(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      outcomes[c] = run_fold(grid[c / opt.folds], splits[c % opt.folds], c % opt.folds);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, cells));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  GridSearchResult res;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> scores;
    ConfigSummary s{grid[g], {}, 0};
    for (std::size_t f = 0; f < opt.folds; ++f) {
      const auto& o = outcomes[g * opt.folds + f];
      scores.push_back(o.val_cindex);
      if (o.error) ++s.failed_folds;
    }
    s.val_cindex = mean_std(scores);
    if (s.failed_folds < opt.folds && s.val_cindex.mean > best) {
      best = s.val_cindex.mean;
      res.best_index = g;
    }
    res.summaries.push_back(std::move(s));
  }
  if (best == -std::numeric_limits<double>::infinity()) throw Error("every grid cell failed");

  for (std::size_t f = 0; f < opt.folds; ++f) {
    auto& o = outcomes[res.best_index * opt.folds + f];
    MetricReport rep;
    if (o.model) {
      rep = evaluate(SurvivalPredictions{o.model->predict(splits[f].test), o.model->cuts}, splits[f].test);
    } else {
      rep.errors.push_back("training failed: " + o.error.value_or("unknown"));
    }
    res.winner_test.push_back(std::move(rep));
    res.winner_folds.push_back(std::move(o));
  }
  return res;
}

}  // namespace cutsurv
