#include "commands.hpp"
#include "model_io.hpp"
#include "statenet/interpret/occlusion.hpp"

namespace statenet::cli {

void OccludeCommand::add(CLI::App& parent) {
  app = parent.add_subcommand("occlude", "Occlusion map of one window");
  app->add_option("--ckpt", ckpt, "Model checkpoint")->required();
  auto* data_opt = app->add_option("--data", data, "Cohort (default: the checkpoint's training cohort)");
  app->add_option("--to-montage", to_montage, "Re-derive the training cohort on this montage")->excludes(data_opt);
  app->add_option("--recording", recording, "Recording id (default: first recording)");
  app->add_option("--window", window, "Window index within the recording (default: highest probability)");
  app->add_option("--occluder", occluder, "Occluder length in samples")->check(CLI::PositiveNumber);
  app->add_option("--stride", stride, "Occluder stride in samples")->check(CLI::PositiveNumber);
  app->add_option("--mode", mode, "temporal or channel-temporal")
      ->check(CLI::IsMember({"temporal", "channel-temporal"}));
  app->add_option("--out", out, "Output directory");
  app->add_flag("--force", force, "Replace a non-empty output directory");
}

void OccludeCommand::run(Streams io) const {
  const fs::path ckpt_path = fs::absolute(ckpt).lexically_normal();
  const json meta = checkpoint_meta(ckpt_path);
  json resolved = {{"command", "occlude"},
                   {"ckpt", ckpt_path.string()},
                   {"occluder", occluder},
                   {"stride", stride},
                   {"mode", mode}};
  eeg::Cohort cohort;
  if (!to_montage.empty()) {
    resolved["to_montage"] = eeg::montage_by_name(to_montage).name;
    cohort = rederive_cohort(meta.at("cohort").get<std::string>(), resolved["to_montage"]);
  } else {
    const auto manifest = manifest_path(data.empty() ? meta.at("cohort").get<std::string>() : data);
    resolved["data"] = manifest.string();
    cohort = eeg::load_cohort(manifest);
  }
  const eeg::Recording* rec = &cohort.recordings.front();
  if (!recording.empty()) {
    const auto it = std::find_if(cohort.recordings.begin(), cohort.recordings.end(),
                                 [&](const eeg::Recording& r) { return r.id == recording; });
    if (it == cohort.recordings.end()) throw std::runtime_error("no recording '" + recording + "' in the cohort");
    rec = &*it;
  }
  resolved["recording"] = rec->id;
  const auto windows = eeg::make_windows(*rec);
  if (windows.empty()) throw std::runtime_error("recording " + rec->id + " is shorter than one window");

  with_precision(checkpoint_dtype(ckpt_path), [&](auto tag) {
    using T = decltype(tag);
    const auto loaded = models::load_model<T>(ckpt_path);
    std::size_t chosen = 0;
    if (window >= 0) {
      if (static_cast<std::size_t>(window) >= windows.size()) {
        throw std::invalid_argument("--window " + std::to_string(window) + " out of range (recording has " +
                                    std::to_string(windows.size()) + " windows)");
      }
      chosen = static_cast<std::size_t>(window);
    } else {
      double best = -1.0;
      for (std::size_t i = 0; i < windows.size(); ++i) {
        const double p = static_cast<double>(loaded.model->predict(windows[i].x.template cast<T>().eval()));
        if (p > best) {
          best = p;
          chosen = i;
        }
      }
    }
    resolved["window"] = chosen;
    const auto hash = config_hash(resolved);
    const auto dir = prepare_run_dir(out, "occlude", hash, force);
    write_config(dir, resolved, hash);

    const auto& w = windows[chosen];
    const auto map = interpret::occlusion_map(*loaded.model, w.x.template cast<T>().eval(), occluder, stride,
                                              interpret::occlusion_mode_from_string(mode), rec->sampling_rate_hz);
    auto summary = interpret::occlusion_summary(map, rec->montage.channels);
    summary["recording"] = rec->id;
    summary["window"] = chosen;
    summary["offset_s"] = w.offset_s;
    summary["label"] = w.y;
    json events = json::array();
    for (const auto& ev : rec->true_events) {
      const double s = std::max(ev.start_s, w.offset_s) - w.offset_s;
      const double e = std::min(ev.end_s, w.offset_s + static_cast<double>(w.x.cols()) / rec->sampling_rate_hz) -
                       w.offset_s;
      if (e > s) events.push_back({s, e});
    }
    summary["true_events_in_window_s"] = events;
    write_text(dir / "occlusion.csv", interpret::occlusion_csv(map, rec->montage.channels));
    write_json(dir / "occlusion.json", summary);
    interpret::write_heatmap_ppm(dir / "occlusion.ppm", map);
    io.out << "window " << chosen << " of " << rec->id << " (offset " << w.offset_s << " s, p = "
           << map.base_probability << ")\n";
    io.out << "peak heat " << summary["argmax"]["heat"].template get<double>() << " at "
           << summary["argmax"]["start_s"].template get<double>() << " s\n";
    io.out << "map written to " << (dir / "occlusion.csv").string() << '\n';
  });
}

}  // namespace statenet::cli
