#pragma once

// Experiment configuration for the command-line front end: where the data
// comes from, how it is split, the training configuration and an optional
// hyperparameter grid.
//
//   {
//     "schema_version": 1,
//     "seed": 7,
//     "data": {"simulator": "two_interval", "n": 10000}
//          or {"csv": "gbsg.csv", "time_column": "rfstime", "event_column": "status",
//              "feature_columns": [...], "t_max": null},
//     "split": {"train": 0.75, "val": 0.15, "test": 0.10},
//     "folds": 5,
//     "train": { ...TrainConfig fields... },
//     "grid": {"hidden": [32, 128, 512], "weight_decay": [1e-4, 1e-2], ...}
//   }

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cutsurv/cv.hpp"
#include "cutsurv/dataset.hpp"
#include "cutsurv/io.hpp"
#include "cutsurv/simulate.hpp"

namespace cutsurv {

struct DataSource {
  std::string simulator;  // "two_interval" | "four_interval"; empty for CSV
  std::size_t n = 0;
  std::optional<std::uint64_t> sim_seed;  // default: experiment seed
  std::string csv_path;                    // resolved against the config file's directory
  CsvSchema schema;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataSource data;
  SplitFractions split;
  std::size_t folds = 5;
  TrainConfig train;
  Json grid = Json::object();  // key -> list of values, applied on top of `train`
};

inline SimulatedData simulate(const std::string& generator, std::size_t n, std::uint64_t seed) {
  if (generator == "two_interval") return simulate_two_interval(n, seed);
  if (generator == "four_interval") return simulate_four_interval(n, seed);
  throw ConfigError("unknown generator '" + generator + "' (expected two_interval|four_interval)");
}

namespace detail {

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  check_schema(j, "experiment config");
  detail::reject_unknown(j, {"schema_version", "seed", "data", "split", "folds", "train", "grid"}, "experiment config");
  ExperimentConfig e;
  try {
    e.seed = j.value("seed", std::uint64_t{0});
    if (!j.contains("data")) throw ConfigError("experiment config: missing 'data'");
    const auto& d = j.at("data");
    detail::reject_unknown(d, {"simulator", "n", "seed", "csv", "time_column", "event_column", "feature_columns", "t_max"},
                           "data");
    if (d.contains("simulator") == d.contains("csv")) {
      throw ConfigError("data: give exactly one of 'simulator' or 'csv'");
    }
    if (d.contains("simulator")) {
      e.data.simulator = d.at("simulator").get<std::string>();
      if (!d.contains("n")) throw ConfigError("data: simulator needs 'n'");
      e.data.n = d.at("n").get<std::size_t>();
      if (d.contains("seed")) e.data.sim_seed = d.at("seed").get<std::uint64_t>();
    } else {
      std::filesystem::path p = d.at("csv").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      e.data.csv_path = p.string();
      e.data.schema.time_column = d.value("time_column", std::string("time"));
      e.data.schema.event_column = d.value("event_column", std::string("event"));
      e.data.schema.feature_columns = d.value("feature_columns", std::vector<std::string>{});
      if (d.contains("t_max") && !d.at("t_max").is_null()) e.data.schema.t_max = d.at("t_max").get<double>();
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      detail::reject_unknown(s, {"train", "val", "test"}, "split");
      e.split.train = s.value("train", e.split.train);
      e.split.val = s.value("val", e.split.val);
      e.split.test = s.value("test", e.split.test);
    }
    e.folds = j.value("folds", std::size_t{5});
    if (e.folds < 1) throw ConfigError("folds must be >= 1");
    e.train = train_config_from_json(j.value("train", Json::object()));
    e.train.seed = j.contains("train") && j.at("train").contains("seed") ? e.train.seed : e.seed;
    if (j.contains("grid")) {
      e.grid = j.at("grid");
      if (!e.grid.is_object()) throw ConfigError("grid must be an object of value lists");
      for (const auto& [key, values] : e.grid.items()) {
        if (!values.is_array() || values.empty()) throw ConfigError("grid '" + key + "' must be a non-empty list");
      }
    }
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("experiment config: ") + ex.what());
  }
  return e;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

inline SurvivalDataset load_data(const ExperimentConfig& e) {
  if (!e.data.simulator.empty()) return simulate(e.data.simulator, e.data.n, e.data.sim_seed.value_or(e.seed)).dataset;
  return load_csv(e.data.csv_path, e.data.schema);
}

/// Cartesian product of the grid lists applied over the base config, in
/// row-major order of the keys as written.
inline std::vector<TrainConfig> expand_grid(const TrainConfig& base, const Json& grid) {
  std::vector<Json> cells{Json::object()};
  for (const auto& [key, values] : grid.items()) {
    std::vector<Json> next;
    for (const auto& c : cells) {
      for (const auto& v : values) {
        Json cell = c;
        cell[key] = v;
        next.push_back(std::move(cell));
      }
    }
    cells = std::move(next);
  }
  std::vector<TrainConfig> out;
  for (const auto& c : cells) out.push_back(train_config_from_json(c, base));
  return out;
}

}  // namespace cutsurv
