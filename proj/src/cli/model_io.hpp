#pragma once

#include <algorithm>
#include <sstream>

#include "common.hpp"
#include "statenet/diff/checkpoint.hpp"
#include "statenet/eeg/manifest.hpp"
#include "statenet/eval/harness.hpp"
#include "statenet/models/zoo.hpp"

namespace statenet::cli {

// Calls f(float{}) or f(double{}).
template <typename F>
decltype(auto) with_precision(const std::string& precision, F&& f) {
  if (precision == "float64") return f(double{});
  return f(float{});
}

inline json checkpoint_meta(const fs::path& ckpt) {
  return diff::read_checkpoint_index(ckpt).value("meta", json::object());
}

inline std::string checkpoint_dtype(const fs::path& ckpt) { return checkpoint_meta(ckpt).value("dtype", "float32"); }

// Checkpoints of a train run directory (fold*/best.ckpt in fold order), or the
// single checkpoint file given.
inline std::vector<fs::path> collect_checkpoints(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("checkpoint " + path.string() + " not found");
  if (!fs::is_directory(path)) return {path};
  std::vector<std::pair<int, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(path)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("fold", 0) != 0 || name.size() == 4) continue;
    if (name.find_first_not_of("0123456789", 4) != std::string::npos) continue;
    const auto ckpt = entry.path() / "best.ckpt";
    if (fs::exists(ckpt)) found.emplace_back(std::stoi(name.substr(4)), ckpt);
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [k, p] : found) out.push_back(p);
  if (out.empty()) throw std::runtime_error(path.string() + " holds no fold*/best.ckpt");
  return out;
}

// The cohort a checkpoint was trained on, re-derived on another montage. Only
// synthetic cohorts (manifest with a synth block) can be re-derived.
inline eeg::Cohort rederive_cohort(const fs::path& source_manifest, const std::string& montage_name) {
  const json manifest = read_json(source_manifest);
  if (!manifest.contains("synth")) {
    throw std::runtime_error("cohort " + source_manifest.string() +
                             " is not synthetic and cannot be re-derived; pass a cohort with --to-data");
  }
  auto cfg = eeg::synth_config_from_json(manifest.at("synth"));
  cfg.montage = eeg::montage_by_name(montage_name);
  eeg::Cohort cohort;
  cohort.montage = cfg.montage;
  cohort.recordings = eeg::synth_cohort(cfg);
  cohort.synth = cfg;
  return cohort;
}

inline std::string predictions_csv(const eval::WindowedCohort& cohort, const std::vector<std::size_t>& idx,
                                   const std::vector<double>& scores) {
  std::ostringstream out;
  out.precision(17);
  out << "neonate_id,recording_id,offset_s,label,probability\n";
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& w = cohort.windows[idx[i]];
    out << w.neonate_id << ',' << w.recording_id << ',' << w.offset_s << ',' << w.y << ',' << scores[i] << '\n';
  }
  return out.str();
}

inline std::string report_table(const eval::MetricReport& report) {
  std::ostringstream out;
  out << report.to_csv();
  return out.str();
}

}  // namespace statenet::cli
