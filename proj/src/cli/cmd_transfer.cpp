#include "commands.hpp"
#include "model_io.hpp"

namespace statenet::cli {

void TransferCommand::add(CLI::App& parent) {
  app = parent.add_subcommand("transfer", "Evaluate trained checkpoints on another montage without retraining");
  app->add_option("--ckpt", ckpt, "Train run directory or a single checkpoint")->required();
  auto* montage_opt = app->add_option("--to-montage", to_montage, "Re-derive the training cohort on this montage");
  auto* data_opt = app->add_option("--to-data", to_data, "Evaluate on this cohort instead");
  montage_opt->excludes(data_opt);
  app->add_option("--out", out, "Output directory");
  app->add_flag("--force", force, "Replace a non-empty output directory");
}

void TransferCommand::run(Streams io) const {
  if (to_montage.empty() && to_data.empty()) throw std::invalid_argument("transfer needs --to-montage or --to-data");
  const auto ckpts = collect_checkpoints(ckpt);

  // Refuse montage-fixed models before any data work.
  for (const auto& path : ckpts) {
    const json meta = checkpoint_meta(path);
    const auto spec = models::model_spec_from_json(meta.at("model"));
    if (spec.arch != "statenet") {
      throw NotTransferable(spec.arch + " checkpoint " + path.string() + " is tied to C=" +
                            std::to_string(meta.value("channels", 0)) +
                            " channels; only montage-agnostic models (statenet) can be transferred");
    }
  }

  const json first_meta = checkpoint_meta(ckpts.front());
  json resolved = {{"command", "transfer"}, {"ckpt", fs::absolute(ckpt).lexically_normal().string()}};
  eeg::Cohort cohort;
  if (!to_data.empty()) {
    const auto manifest = manifest_path(to_data);
    resolved["to_data"] = manifest.string();
    cohort = eeg::load_cohort(manifest);
  } else {
    const auto name = eeg::montage_by_name(to_montage).name;
    resolved["to_montage"] = name;
    cohort = rederive_cohort(first_meta.at("cohort").get<std::string>(), name);
  }
  const auto hash = config_hash(resolved);
  const auto dir = prepare_run_dir(out, "transfer", hash, force);
  write_config(dir, resolved, hash);
  Log log(dir / "log.txt", io.err);

  const auto windows = eval::window_cohort(cohort.recordings);
  log("target cohort: " + std::to_string(windows.neonates.size()) + " neonates, " +
      std::to_string(windows.windows.size()) + " windows on " + windows.montage);
  eval::MetricReport report;
  json hashes = json::array();
  for (const auto& path : ckpts) {
    const auto before = diff::checkpoint_hash(path);
    const json meta = checkpoint_meta(path);
    std::vector<std::string> test_ids = windows.neonates;
    if (meta.contains("split")) test_ids = meta.at("split").at("test").get<std::vector<std::string>>();
    with_precision(checkpoint_dtype(path), [&](auto tag) {
      using T = decltype(tag);
      const auto loaded = models::load_model<T>(path);
      const auto part = eval::transfer_eval<T>({loaded.model.get()}, {test_ids}, windows);
      auto row = part.folds.front();
      row.fold = std::to_string(meta.value("fold", static_cast<int>(report.folds.size()) + 1));
      report.folds.push_back(row);
    });
    const auto after = diff::checkpoint_hash(path);
    if (after != before) throw std::runtime_error(path.string() + " changed during transfer");
    hashes.push_back({{"checkpoint", path.string()}, {"hash_before", hex(before)}, {"hash_after", hex(after)}});
    log("fold " + report.folds.back().fold + " scored on " + windows.montage);
  }
  report.finalize();
  report.meta = {{"command", "transfer"},
                 {"source_montage", first_meta.value("montage", "")},
                 {"target_montage", windows.montage},
                 {"checkpoints", hashes},
                 {"config_hash", hex(hash)}};
  write_text(dir / "report.csv", report.to_csv());
  write_json(dir / "report.json", report.to_json());
  io.out << report.to_csv();
  io.out << "checkpoints unchanged (" << ckpts.size() << " hashed before and after)\n";
  io.out << "report written to " << (dir / "report.csv").string() << '\n';
}

}  // namespace statenet::cli
