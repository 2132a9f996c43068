// cutsurv: simulate, train, grid-search and evaluate survival models with
// learned cut points. All outputs are plain CSV/JSON text.
//
// Exit codes: 0 success, 1 bad input/config, 2 a metric was undefined,
// 3 training diverged (trace files are still written).

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cutsurv/cutsurv.hpp"

namespace fs = std::filesystem;
using namespace cutsurv;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitMetric = 2;
constexpr int kExitDiverged = 3;

void write_dataset(const fs::path& path, const SurvivalDataset& data) {
  std::ostringstream s;
  write_csv(s, data);
  write_text_file(path.string(), s.str());
}

void write_traces(const fs::path& dir, const std::vector<EpochTrace>& trace) {
  std::ostringstream t, c;
  write_trace_csv(t, trace);
  write_cut_history_csv(c, trace);
  write_text_file((dir / "trace.csv").string(), t.str());
  write_text_file((dir / "cut_history.csv").string(), c.str());
}

std::string format(double v) { return detail::format_double(v); }

Json summary_json(const std::vector<std::optional<double>>& values) {
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
  }
  if (defined.empty()) return Json(nullptr);
  const auto s = mean_std(defined);
  return Json{{"mean", s.mean}, {"std", s.std}, {"n", s.n}};
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string gen;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto sim = simulate(a.gen, a.n, a.seed);
  fs::create_directories(a.out);
  write_dataset(fs::path(a.out) / "data.csv", sim.dataset);
  const std::size_t clusters = a.gen == "two_interval" ? 2 : 4;
  write_text_file((fs::path(a.out) / "meta.json").string(),
                  simulation_meta_json(a.gen, a.n, a.seed, sim.true_cuts, sim.dataset.t_max(), a.n / clusters)
                          .dump(2) +
                      "\n");
  std::cout << "wrote " << a.n << " records (" << sim.dataset.event_count() << " events) to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

ExperimentConfig load_with_overrides(const std::string& path, const std::optional<std::uint64_t>& seed,
                                     const std::optional<std::string>& mode) {
  auto e = load_experiment(path);
  if (seed) {
    e.seed = *seed;
    e.train.seed = *seed;
  }
  if (mode) e.train.mode = parse_mode(*mode);
  return e;
}

int cmd_train(const TrainArgs& a) {
  const auto e = load_with_overrides(a.config, a.seed, a.mode);
  const auto data = load_data(e);
  const auto parts = split(data, e.split, e.seed);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_dataset(out / "train.csv", parts.train);
  write_dataset(out / "val.csv", parts.val);
  write_dataset(out / "test.csv", parts.test);

  try {
    const auto model = train(e.train, parts.train, parts.val);
    write_text_file((out / "model.json").string(), model_to_json(model).dump(2) + "\n");
    write_traces(out, model.trace);
    for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
    if (model.clamped_survival > 0) {
      std::cerr << "warning: " << model.clamped_survival << " censored-record survival values clamped at "
                << kSurvivalFloor << "\n";
    }
    std::cout << to_string(model.config.mode) << " model: cut points";
    for (double c : model.cuts.interior()) std::cout << ' ' << format(c);
    std::cout << " (initial";
    for (double c : model.initial_cuts.interior()) std::cout << ' ' << format(c);
    std::cout << "), best epoch " << model.best_epoch << ", final tau " << format(model.final_tau) << "\n";
    return 0;
  } catch (const TrainingDiverged& d) {
    write_traces(out, d.trace);
    std::cerr << "error: training diverged at epoch " << d.epoch << ", batch " << d.batch << ": " << d.what()
              << "\n";
    return kExitDiverged;
  }
}

// ---------------------------------------------------------------------------

struct GridArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

int cmd_gridsearch(const GridArgs& a) {
  const auto e = load_with_overrides(a.config, a.seed, std::nullopt);
  const auto data = load_data(e);
  const auto grid = expand_grid(e.train, e.grid);
  std::cout << "grid search: " << grid.size() << " configurations x " << e.folds << " folds\n";
  const auto res = grid_search_cv(grid, data, CvOptions{e.folds, e.split, e.seed, a.jobs});

  const fs::path out(a.out);
  fs::create_directories(out);

  std::vector<std::size_t> order(res.summaries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return res.summaries[x].val_cindex.mean > res.summaries[y].val_cindex.mean;
  });
  std::ostringstream board;
  board << "rank,grid_index,m,hidden,lr,weight_decay,reg_strength,reg_form,mode,mean_val_cindex,std_val_cindex,"
           "failed_folds\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& s = res.summaries[order[r]];
    const auto& c = s.config;
    board << r + 1 << ',' << order[r] << ',' << c.m << ',' << c.hidden << ',' << format(c.lr) << ','
          << format(c.weight_decay) << ',' << format(c.reg_strength) << ','
          << (c.reg_form == RegularizerForm::LogPdf ? "log_pdf" : "pdf") << ',' << to_string(c.mode) << ','
          << format(s.val_cindex.mean) << ',' << format(s.val_cindex.std) << ',' << s.failed_folds << '\n';
  }
  write_text_file((out / "leaderboard.csv").string(), board.str());

  Json folds = Json::array();
  std::vector<std::optional<double>> ci, auc, slope, intercept;
  bool undefined = false;
  std::optional<std::size_t> best_fold;
  for (std::size_t f = 0; f < res.winner_test.size(); ++f) {
    const auto& rep = res.winner_test[f];
    const auto& o = res.winner_folds[f];
    Json fj = to_json(rep);
    fj["fold"] = f;
    fj["val_cindex"] = o.val_cindex;
    if (o.model) {
      fj["cut_points"] = o.model->cuts.interior();
      if (!best_fold || o.val_cindex > res.winner_folds[*best_fold].val_cindex) best_fold = f;
    }
    folds.push_back(std::move(fj));
    ci.push_back(rep.cindex);
    auc.push_back(rep.auc_last);
    slope.push_back(rep.calib_slope);
    intercept.push_back(rep.calib_intercept);
    undefined = undefined || !rep.complete();
  }
  const auto& winner = res.summaries[res.best_index];
  Json w;
  w["schema_version"] = kSchemaVersion;
  w["grid_index"] = res.best_index;
  w["config"] = to_json(winner.config);
  w["val_cindex"] = {{"mean", winner.val_cindex.mean}, {"std", winner.val_cindex.std}};
  w["test"] = {{"cindex", summary_json(ci)},
               {"auc_last", summary_json(auc)},
               {"calib_slope", summary_json(slope)},
               {"calib_intercept", summary_json(intercept)}};
  w["folds"] = std::move(folds);
  if (best_fold) w["artifact_fold"] = *best_fold;
  write_text_file((out / "winner.json").string(), w.dump(2) + "\n");
  if (best_fold) {
    write_text_file((out / "winner_model.json").string(),
                    model_to_json(*res.winner_folds[*best_fold].model).dump(2) + "\n");
  }

  std::cout << "winner: grid index " << res.best_index << ", validation CI " << format(winner.val_cindex.mean)
            << " (" << format(winner.val_cindex.std) << ")\n";
  if (const auto s = summary_json(ci); !s.is_null()) {
    std::cout << "test CI " << format(s.at("mean").get<double>()) << " (" << format(s.at("std").get<double>())
              << ")\n";
  }
  if (undefined) {
    std::cerr << "error: some test-set metrics were undefined; see winner.json\n";
    return kExitMetric;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string time_column = "time";
  std::string event_column = "event";
  std::vector<std::string> features;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto model = model_from_json(read_json_file(a.model));
  CsvSchema schema;
  schema.time_column = a.time_column;
  schema.event_column = a.event_column;
  schema.feature_columns = a.features;
  schema.t_max = model.cuts.t_max();
  const auto data = load_csv(a.data, schema);
  if (data.feature_dim() != model.params.input_dim()) {
    throw ConfigError("dataset has " + std::to_string(data.feature_dim()) + " features, model expects " +
                      std::to_string(model.params.input_dim()));
  }
  auto rep = evaluate(SurvivalPredictions{model.predict(data), model.cuts}, data);
  if (fingerprint(data) == model.train_fingerprint) {
    rep.warnings.push_back("evaluation data is identical to the model's training data");
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  write_text_file((out / "report.json").string(), to_json(rep).dump(2) + "\n");
  write_text_file((out / "report.csv").string(), std::string(kMetricCsvHeader) + "\n" + metric_csv_row(rep) + "\n");

  auto show = [](const char* name, const std::optional<double>& v) {
    std::cout << name << ' ' << (v ? format(*v) : std::string("undefined")) << "\n";
  };
  show("cindex", rep.cindex);
  show("auc_last", rep.auc_last);
  show("calib_slope", rep.calib_slope);
  show("calib_intercept", rep.calib_intercept);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
  return rep.complete() ? 0 : kExitMetric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survival models with learned cut points"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a simulated dataset with known cut points");
  s->add_option("--gen", sim.gen, "two_interval or four_interval")
      ->required()
      ->check(CLI::IsMember({"two_interval", "four_interval"}));
  s->add_option("--n", sim.n, "number of records")->required();
  s->add_option("--seed", sim.seed, "random seed")->required();
  s->add_option("--out", sim.out, "output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model on the configured split");
  t->add_option("--config", tr.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--seed", tr.seed, "override the experiment seed");
  t->add_option("--mode", tr.mode, "learned or baseline")->check(CLI::IsMember({"learned", "baseline"}));

  GridArgs gr;
  auto* g = app.add_subcommand("gridsearch", "Grid search with repeated random splits");
  g->add_option("--config", gr.config, "experiment config (JSON) with a 'grid' section")
      ->required()
      ->check(CLI::ExistingFile);
  g->add_option("--out", gr.out, "output directory")->required();
  g->add_option("--seed", gr.seed, "override the experiment seed");
  g->add_option("--jobs", gr.jobs, "worker threads")->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compute metrics of a trained model on a CSV dataset");
  e->add_option("--model", ev.model, "model artifact (JSON)")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "output directory")->required();
  e->add_option("--time-column", ev.time_column, "time column name");
  e->add_option("--event-column", ev.event_column, "event column name");
  e->add_option("--features", ev.features, "feature columns (default: all others)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (t->parsed()) return cmd_train(tr);
    if (g->parsed()) return cmd_gridsearch(gr);
    if (e->parsed()) return cmd_evaluate(ev);
  } catch (const ParseError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
