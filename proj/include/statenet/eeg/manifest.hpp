#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "statenet/eeg/recording.hpp"
#include "statenet/eeg/synth.hpp"

namespace statenet::eeg {

// Cohort directory layout:
//   manifest.json
//   signals/<recording id>.f32   raw little-endian float32, row-major C x T
//
// manifest.json:
//   { "format": "statenet-cohort/1",
//     "montage": {"name": ..., "channels": [...]},
//     "synth": {...},                       (optional, synthetic cohorts only)
//     "recordings": [
//       { "id", "neonate_id", "fs", "channels": [...], "n_samples",
//         "signal_file",                     (relative to the manifest)
//         "annotations": [{"annotator": "A1", "events": [[s, e], ...]}, ...],
//         "true_events": [[s, e], ...] }     (optional)
//     ] }

inline constexpr const char* kCohortFormat = "statenet-cohort/1";

void read_signal_file(const std::filesystem::path& path, Signal<float>& out);
void write_signal_file(const std::filesystem::path& path, const Signal<float>& signal);

Recording load_recording(const std::filesystem::path& manifest_path, const std::string& recording_id);

struct Cohort {
  Montage montage;
  std::vector<Recording> recordings;
  std::optional<SynthConfig> synth;
};

Cohort load_cohort(const std::filesystem::path& manifest_path);

// Writes manifest.json and signals/ under `dir`, which must exist.
void write_cohort(const std::filesystem::path& dir, const std::vector<Recording>& recordings,
                  const std::optional<SynthConfig>& synth);

nlohmann::json synth_config_to_json(const SynthConfig& cfg);
// Rejects unknown keys; missing keys keep their defaults.
SynthConfig synth_config_from_json(const nlohmann::json& j);

nlohmann::json montage_to_json(const Montage& m);
Montage montage_from_json(const nlohmann::json& j);

}  // namespace statenet::eeg
