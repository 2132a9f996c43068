#pragma once

// JSON/CSV serialisation: training configs, the model artifact, metric
// reports, epoch traces and simulator metadata. Every JSON document carries
// a schema_version field.

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "cutsurv/dataset.hpp"
#include "cutsurv/metrics.hpp"
#include "cutsurv/train.hpp"

namespace cutsurv {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline void check_schema(const Json& j, const std::string& what) {
  if (!j.contains("schema_version")) throw ParseError(what + ": missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ParseError(what + ": unsupported schema_version " + j.at("schema_version").dump());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// TrainConfig

inline Json to_json(const TrainConfig& c) {
  Json j;
  j["m"] = c.m;
  j["hidden"] = c.hidden;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["reg_strength"] = c.reg_strength;
  j["reg_form"] = c.reg_form == RegularizerForm::LogPdf ? "log_pdf" : "pdf";
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["tau_init"] = c.tau_init ? Json(*c.tau_init) : Json(nullptr);
  j["tau_floor"] = c.tau_floor ? Json(*c.tau_floor) : Json(nullptr);
  j["tau_factor"] = c.tau_factor;
  j["patience"] = c.patience;
  j["improvement"] = c.improvement;
  j["min_gap"] = c.min_gap ? Json(*c.min_gap) : Json(nullptr);
  j["cut_lr_scale"] = c.cut_lr_scale;
  j["initial_cuts"] = c.initial_cuts;
  j["standardize"] = c.standardize;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  return j;
}

/// Fields absent from `j` keep the values of `base`; unknown keys are rejected.
inline TrainConfig train_config_from_json(const Json& j, TrainConfig base = {}) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  auto opt = [&](const char* key, std::optional<double>& field) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
      field.reset();
    } else {
      field = j.at(key).get<double>();
    }
  };
  static const char* known[] = {"m",         "hidden",    "lr",         "weight_decay", "reg_strength",
                                "reg_form",  "batch_size", "epochs",    "tau_init",     "tau_floor",
                                "tau_factor", "patience",  "improvement", "min_gap",    "cut_lr_scale", "initial_cuts",
                                "standardize", "seed",     "mode"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      throw ConfigError("unknown train config key '" + key + "'");
    }
  }
  try {
    if (j.contains("m")) base.m = j.at("m").get<std::size_t>();
    if (j.contains("hidden")) base.hidden = j.at("hidden").get<std::size_t>();
    if (j.contains("lr")) base.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) base.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("reg_strength")) base.reg_strength = j.at("reg_strength").get<double>();
    if (j.contains("reg_form")) {
      const auto f = j.at("reg_form").get<std::string>();
      if (f == "log_pdf") {
        base.reg_form = RegularizerForm::LogPdf;
      } else if (f == "pdf") {
        base.reg_form = RegularizerForm::Pdf;
      } else {
        throw ConfigError("reg_form must be log_pdf or pdf");
      }
    }
    if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    opt("tau_init", base.tau_init);
    opt("tau_floor", base.tau_floor);
    if (j.contains("tau_factor")) base.tau_factor = j.at("tau_factor").get<double>();
    if (j.contains("patience")) base.patience = j.at("patience").get<std::size_t>();
    if (j.contains("improvement")) base.improvement = j.at("improvement").get<double>();
    opt("min_gap", base.min_gap);
    if (j.contains("cut_lr_scale")) base.cut_lr_scale = j.at("cut_lr_scale").get<double>();
    if (j.contains("initial_cuts")) base.initial_cuts = j.at("initial_cuts").get<std::vector<double>>();
    if (j.contains("standardize")) base.standardize = j.at("standardize").get<bool>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode")) base.mode = parse_mode(j.at("mode").get<std::string>());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------
// Model artifact

namespace detail {

inline Json matrix_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ParseError("tensor data length mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const Json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace detail

inline Json model_to_json(const FittedModel& m) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "cutsurv_model";
  j["config"] = to_json(m.config);
  j["t_max"] = m.cuts.t_max();
  j["cut_points"] = m.cuts.interior();
  j["initial_cut_points"] = m.initial_cuts.interior();
  j["params"] = {{"w1", detail::matrix_json(m.params.w1)},
                 {"b1", detail::vector_json(m.params.b1)},
                 {"w2", detail::matrix_json(m.params.w2)},
                 {"b2", detail::vector_json(m.params.b2)}};
  j["scaler"] = {{"mean", m.scaler.mean}, {"scale", m.scaler.scale}};
  j["final_tau"] = m.final_tau;
  j["best_epoch"] = m.best_epoch;
  j["train_fingerprint"] = detail::hex64(m.train_fingerprint);
  j["clamped_survival"] = m.clamped_survival;
  j["warnings"] = m.warnings;
  Json trace = Json::array();
  for (const auto& t : m.trace) {
    trace.push_back({{"epoch", t.epoch}, {"train_loss", t.train_loss}, {"val_loss", t.val_loss}, {"tau", t.tau},
                     {"cut_points", t.cuts}});
  }
  j["trace"] = std::move(trace);
  return j;
}

inline FittedModel model_from_json(const Json& j) {
  check_schema(j, "model artifact");
  try {
    const double t_max = j.at("t_max").get<double>();
    MLPParams params{detail::matrix_from_json(j.at("params").at("w1")),
                     detail::vector_from_json(j.at("params").at("b1")),
                     detail::matrix_from_json(j.at("params").at("w2")),
                     detail::vector_from_json(j.at("params").at("b2"))};
    CutPoints cuts(j.at("cut_points").get<std::vector<double>>(), t_max);
    if (params.output_dim() != cuts.interval_count() || params.b2.size() != params.w2.rows() ||
        params.b1.size() != params.w1.rows() || params.w2.cols() != params.w1.rows()) {
      throw ParseError("model artifact: tensor shapes inconsistent with cut points");
    }
    FittedModel m{std::move(params),
                  cuts,
                  FeatureScaler{j.at("scaler").at("mean").get<std::vector<double>>(),
                                j.at("scaler").at("scale").get<std::vector<double>>()},
                  train_config_from_json(j.at("config")),
                  CutPoints(j.at("initial_cut_points").get<std::vector<double>>(), t_max),
                  j.at("final_tau").get<double>(),
                  j.at("best_epoch").get<std::size_t>(),
                  {},
                  j.value("clamped_survival", std::size_t{0}),
                  std::stoull(j.at("train_fingerprint").get<std::string>(), nullptr, 16),
                  j.value("warnings", std::vector<std::string>{})};
    for (const auto& t : j.at("trace")) {
      m.trace.push_back({t.at("epoch").get<std::size_t>(), t.at("train_loss").get<double>(),
                         t.at("val_loss").get<double>(), t.at("tau").get<double>(),
                         t.at("cut_points").get<std::vector<double>>()});
    }
    if (m.scaler.mean.size() != m.params.input_dim() || m.scaler.scale.size() != m.params.input_dim()) {
      throw ParseError("model artifact: scaler dimension mismatch");
    }
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model artifact: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("model artifact: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Traces and reports

inline void write_trace_csv(std::ostream& out, const std::vector<EpochTrace>& trace) {
  out << "epoch,train_loss,val_loss,tau\n";
  for (const auto& t : trace) {
    out << t.epoch << ',' << detail::format_double(t.train_loss) << ',' << detail::format_double(t.val_loss) << ','
        << detail::format_double(t.tau) << '\n';
  }
}

inline void write_cut_history_csv(std::ostream& out, const std::vector<EpochTrace>& trace) {
  const std::size_t m = trace.empty() ? 0 : trace.front().cuts.size();
  out << "epoch";
  for (std::size_t k = 1; k <= m; ++k) out << ",c" << k;
  out << '\n';
  for (const auto& t : trace) {
    out << t.epoch;
    for (double c : t.cuts) out << ',' << detail::format_double(c);
    out << '\n';
  }
}

inline Json to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["cindex"] = opt(r.cindex);
  j["auc_last"] = opt(r.auc_last);
  j["calib_slope"] = opt(r.calib_slope);
  j["calib_intercept"] = opt(r.calib_intercept);
  j["comparable_pairs"] = r.comparable_pairs;
  j["auc_cases"] = r.auc_cases;
  j["auc_controls"] = r.auc_controls;
  j["auc_omitted"] = r.auc_omitted;
  j["calib_records"] = r.calib_records;
  j["errors"] = r.errors;
  j["warnings"] = r.warnings;
  return j;
}

inline constexpr const char* kMetricCsvHeader =
    "cindex,auc_last,calib_slope,calib_intercept,comparable_pairs,auc_cases,auc_controls,auc_omitted,calib_records";

inline std::string metric_csv_row(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); };
  std::ostringstream s;
  s << opt(r.cindex) << ',' << opt(r.auc_last) << ',' << opt(r.calib_slope) << ',' << opt(r.calib_intercept) << ','
    << r.comparable_pairs << ',' << r.auc_cases << ',' << r.auc_controls << ',' << r.auc_omitted << ','
    << r.calib_records;
  return s.str();
}

inline Json simulation_meta_json(const std::string& generator, std::size_t n, std::uint64_t seed,
                                 const std::vector<double>& true_cuts, double t_max, std::size_t per_cluster) {
  return Json{{"schema_version", kSchemaVersion},
              {"generator", generator},
              {"seed", seed},
              {"n", n},
              {"per_cluster", per_cluster},
              {"true_cuts", true_cuts},
              {"t_max", t_max}};
}

}  // namespace cutsurv
