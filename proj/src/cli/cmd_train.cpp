#include <iomanip>
#include <sstream>

#include "commands.hpp"
#include "model_io.hpp"

namespace statenet::cli {
namespace {

std::string epoch_line(int fold, const train::EpochRecord& e) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << "fold " << fold << " epoch " << e.epoch << " loss " << e.train_loss;
  out << " val_auroc " << (e.val_auroc ? std::to_string(*e.val_auroc) : "undefined");
  out << " val_auprc " << (e.val_auprc ? std::to_string(*e.val_auprc) : "undefined");
  return out.str();
}

std::string history_row(int fold, const train::EpochRecord& e) {
  std::ostringstream out;
  out.precision(17);
  out << fold << ',' << e.epoch << ',' << e.train_loss << ',';
  if (e.val_auroc) out << *e.val_auroc;
  out << ',';
  if (e.val_auprc) out << *e.val_auprc;
  out << '\n';
  return out.str();
}

json split_json(const eeg::Fold& fold, const std::vector<std::string>& validation) {
  std::vector<std::string> fit;
  for (const auto& id : fold.train) {
    if (std::find(validation.begin(), validation.end(), id) == validation.end()) fit.push_back(id);
  }
  return {{"train", fit}, {"validation", validation}, {"test", fold.test}};
}

template <typename T>
void run_train(const json& resolved, const fs::path& dir, const eeg::Cohort& cohort, const models::ModelSpec& spec,
               const train::TrainConfig& cfg, const eval::CvOptions& options, std::uint64_t hash, Streams io) {
  Log log(dir / "log.txt", io.err);
  const auto windows = eval::window_cohort(cohort.recordings);
  log("cohort " + resolved.at("data").get<std::string>() + ": " + std::to_string(windows.neonates.size()) +
      " neonates, " + std::to_string(windows.windows.size()) + " windows on " + windows.montage);

  std::string history = "fold,epoch,train_loss,val_auroc,val_auprc\n";
  json splits = json::object();
  const json base_meta = {{"montage", windows.montage},
                          {"cohort", resolved.at("data")},
                          {"config_hash", hex(hash)},
                          {"train", train::train_config_to_json(cfg)}};
  int first_fold = 0;

  auto on_epoch = [&](int fold, const train::EpochRecord& e) {
    log(epoch_line(fold, e));
    history += history_row(fold, e);
  };
  auto on_fold = [&](eval::FoldRun<T>& run) {
    const auto fold_dir = dir / ("fold" + std::to_string(run.fold));
    fs::create_directories(fold_dir);
    json meta = base_meta;
    meta["fold"] = run.fold;
    meta["split"] = split_json(run.split, run.validation_ids);
    meta["best_epoch"] = run.fit.history.best_epoch;
    splits[std::to_string(run.fold)] = meta["split"];
    models::save_model(fold_dir / "best.ckpt", *run.model, windows.channels, meta);
    const auto final_model = models::make_classifier<T>(spec, windows.channels, run.fit.final);
    models::save_model(fold_dir / "final.ckpt", *final_model, windows.channels, meta);
    write_text(fold_dir / "history.csv", run.fit.history.to_csv());
    write_text(fold_dir / "predictions.csv",
               predictions_csv(windows, windows.select(run.split.test), run.test_scores));
    if (first_fold == 0) first_fold = run.fold;
    log("fold " + std::to_string(run.fold) + " test: " + std::to_string(run.test_scores.size()) + " windows");
  };

  auto result = eval::cross_validate<T>(spec, windows, options, cfg, on_fold, on_epoch);
  result.report.meta = {{"command", "train"},
                        {"arch", spec.arch},
                        {"montage", windows.montage},
                        {"seed", cfg.seed},
                        {"config_hash", hex(hash)}};
  write_text(dir / "history.csv", history);
  write_json(dir / "split.json", splits);
  write_text(dir / "report.csv", result.report.to_csv());
  write_json(dir / "report.json", result.report.to_json());
  const auto first = dir / ("fold" + std::to_string(first_fold));
  diff::copy_checkpoint(first / "best.ckpt", dir / "best.ckpt");
  diff::copy_checkpoint(first / "final.ckpt", dir / "final.ckpt");

  io.out << result.report.to_csv();
  io.out << "report written to " << (dir / "report.csv").string() << '\n';
}

}  // namespace

void TrainCommand::add(CLI::App& parent) {
  app = parent.add_subcommand("train", "Patient-wise cross-validated training");
  app->add_option("--config", config, "JSON config with keys data, montage, folds, only_folds, preset, model, train, out");
  app->add_option("--out", out, "Run directory");
  app->add_flag("--force", force, "Replace a non-empty run directory");
  data_opt = app->add_option("--data", data, "Cohort directory or manifest");
  montage_opt = app->add_option("--montage", montage, "Expected cohort montage (18 or 3)");
  folds_opt = app->add_option("--folds", folds, "Number of patient-wise folds")->check(CLI::PositiveNumber);
  only_opt = app->add_option("--fold", only_folds, "Train only these folds (1-based, repeatable)");
  preset_opt = app->add_option("--preset", preset, "Starting configuration: default or desk")
                   ->check(CLI::IsMember(preset_names()));
  model.add(*app, true);
  train.add(*app);
}

void TrainCommand::run(Streams io) const {
  const json file =
      load_config_file(config, {"data", "montage", "folds", "only_folds", "preset", "model", "train", "out"});
  const auto preset_name = given(preset_opt) ? preset : file.value("preset", preset);
  const Preset base = preset_by_name(preset_name);
  auto spec = models::model_spec_from_json(
      merged(models::model_spec_to_json(base.model), file.value("model", json::object())));
  model.apply(spec);
  auto cfg = train::train_config_from_json(
      merged(train::train_config_to_json(base.train), file.value("train", json::object())));
  train.apply(cfg);

  eval::CvOptions options;
  options.folds = given(folds_opt) ? folds : file.value("folds", 4);
  options.only_folds = given(only_opt) ? only_folds : file.value("only_folds", std::vector<int>{});
  for (int k : options.only_folds) {
    if (k < 1 || k > options.folds) throw std::invalid_argument("--fold " + std::to_string(k) + " out of range");
  }
  const auto manifest = manifest_path(given(data_opt) ? data : file.value("data", ""));
  auto cohort = eeg::load_cohort(manifest);
  const std::string wanted = given(montage_opt) ? montage : file.value("montage", "");
  if (!wanted.empty() && eeg::montage_by_name(wanted).name != cohort.montage.name) {
    throw std::runtime_error("montage mismatch: cohort " + manifest.string() + " is on " + cohort.montage.name +
                             ", requested " + eeg::montage_by_name(wanted).name);
  }

  const json resolved = {{"command", "train"},
                         {"data", manifest.string()},
                         {"montage", cohort.montage.name},
                         {"folds", options.folds},
                         {"only_folds", options.only_folds},
                         {"preset", preset_name},
                         {"model", models::model_spec_to_json(spec)},
                         {"train", train::train_config_to_json(cfg)}};
  const auto hash = config_hash(resolved);
  const auto dir = prepare_run_dir(given(app->get_option("--out")) ? out : file.value("out", ""), "train", hash, force);
  write_config(dir, resolved, hash);
  with_precision(cfg.precision, [&](auto tag) {
    using T = decltype(tag);
    run_train<T>(resolved, dir, cohort, spec, cfg, options, hash, io);
  });
}

void EvalCommand::add(CLI::App& parent) {
  app = parent.add_subcommand("eval", "Score the fold checkpoints of a train run on their test neonates");
  app->add_option("--run", run_dir, "Train run directory")->required();
  app->add_option("--data", data, "Cohort to score (default: the run's cohort)");
  app->add_option("--out", out, "Output directory");
  app->add_flag("--force", force, "Replace a non-empty output directory");
}

void EvalCommand::run(Streams io) const {
  const json train_cfg = read_json(fs::path(run_dir) / "config.json");
  const auto manifest = manifest_path(data.empty() ? train_cfg.at("data").get<std::string>() : data);
  const auto ckpts = collect_checkpoints(run_dir);
  const json resolved = {{"command", "eval"},
                         {"run", fs::absolute(run_dir).lexically_normal().string()},
                         {"data", manifest.string()}};
  const auto hash = config_hash(resolved);
  const auto dir = prepare_run_dir(out, "eval", hash, force);
  write_config(dir, resolved, hash);
  Log log(dir / "log.txt", io.err);

  const auto cohort = eeg::load_cohort(manifest);
  const auto windows = eval::window_cohort(cohort.recordings);
  eval::MetricReport report;
  json hashes = json::array();
  for (const auto& ckpt : ckpts) {
    const auto before = diff::checkpoint_hash(ckpt);
    const json meta = checkpoint_meta(ckpt);
    const auto test_ids = meta.at("split").at("test").get<std::vector<std::string>>();
    const auto idx = windows.select(test_ids);
    std::vector<double> scores;
    with_precision(checkpoint_dtype(ckpt), [&](auto tag) {
      using T = decltype(tag);
      const auto loaded = models::load_model<T>(ckpt);
      if (!loaded.model->montage_agnostic() && loaded.channels != windows.channels) {
        throw ShapeError(loaded.model->arch() + " checkpoint expects C=" + std::to_string(loaded.channels) +
                         " but the cohort has C=" + std::to_string(windows.channels));
      }
      scores = eval::predict_windows(*loaded.model, windows, idx);
    });
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(windows.windows[i].y);
    const std::string fold = std::to_string(meta.value("fold", static_cast<int>(report.folds.size()) + 1));
    report.folds.push_back(eval::score_fold(fold, windows.montage, scores, labels));
    if (diff::checkpoint_hash(ckpt) != before) throw std::runtime_error(ckpt.string() + " changed during evaluation");
    hashes.push_back({{"checkpoint", ckpt.string()}, {"hash", hex(before)}});
    log("fold " + fold + ": " + std::to_string(idx.size()) + " test windows");
  }
  report.finalize();
  report.meta = {{"command", "eval"}, {"run", resolved.at("run")}, {"checkpoints", hashes}, {"config_hash", hex(hash)}};
  write_text(dir / "report.csv", report.to_csv());
  write_json(dir / "report.json", report.to_json());
  io.out << report.to_csv();
  io.out << "report written to " << (dir / "report.csv").string() << '\n';
}

}  // namespace statenet::cli
