#include "statenet/eeg/manifest.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace statenet::eeg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

json intervals_to_json(const std::vector<Interval>& events) {
  json out = json::array();
  for (const auto& ev : events) out.push_back({ev.start_s, ev.end_s});
  return out;
}

std::vector<Interval> intervals_from_json(const json& j) {
  std::vector<Interval> out;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw DataError("interval must be [start_s, end_s]");
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Recording recording_from_entry(const json& entry, const fs::path& base) {
  Recording rec;
  try {
    rec.id = entry.at("id").get<std::string>();
    rec.neonate_id = entry.at("neonate_id").get<std::string>();
    rec.sampling_rate_hz = entry.at("fs").get<double>();
    rec.montage.name = entry.value("montage", std::string("custom"));
    rec.montage.channels = entry.at("channels").get<std::vector<std::string>>();
    const auto n_samples = entry.at("n_samples").get<Index>();
    const auto file = base / entry.at("signal_file").get<std::string>();
    if (n_samples < 1) throw DataError("recording " + rec.id + ": n_samples must be positive");
    rec.signal.resize(rec.montage.size(), n_samples);
    read_signal_file(file, rec.signal);
    for (const auto& track : entry.value("annotations", json::array())) {
      rec.annotations.push_back({track.at("annotator").get<std::string>(),
                                 intervals_from_json(track.at("events"))});
    }
    if (entry.contains("true_events")) rec.true_events = intervals_from_json(entry["true_events"]);
  } catch (const json::exception& e) {
    throw DataError("manifest entry: " + std::string(e.what()));
  }
  rec.validate();
  return rec;
}

template <typename T>
json range_to_json(const Range<T>& r) {
  return json::array({r.lo, r.hi});
}

template <typename T>
Range<T> range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("range must be [lo, hi]");
  return {j[0].get<T>(), j[1].get<T>()};
}

}  // namespace

void read_signal_file(const fs::path& path, Signal<float>& out) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("missing signal file " + path.string());
  const auto bytes = static_cast<std::uintmax_t>(in.tellg());
  const auto expected = static_cast<std::uintmax_t>(4) * static_cast<std::uintmax_t>(out.size());
  if (bytes != expected) {
    throw DataError("shape mismatch: " + path.string() + " holds " + std::to_string(bytes) +
                    " bytes, header implies " + std::to_string(out.rows()) + "x" +
                    std::to_string(out.cols()) + " float32 = " + std::to_string(expected));
  }
  in.seekg(0);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(expected));
  if (!in) throw DataError("short read on " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    auto* words = reinterpret_cast<std::uint32_t*>(out.data());
    for (Index i = 0; i < out.size(); ++i) words[i] = byteswap32(words[i]);
  }
  for (Index c = 0; c < out.rows(); ++c) {
    for (Index t = 0; t < out.cols(); ++t) {
      if (!std::isfinite(out(c, t))) {
        throw DataError("non-finite sample in " + path.string() + " at channel " +
                        std::to_string(c) + ", index " + std::to_string(t));
      }
    }
  }
}

void write_signal_file(const fs::path& path, const Signal<float>& signal) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(signal.data()),
              static_cast<std::streamsize>(signal.size() * 4));
  } else {
    for (Index i = 0; i < signal.size(); ++i) {
      std::uint32_t w;
      std::memcpy(&w, signal.data() + i, 4);
      w = byteswap32(w);
      out.write(reinterpret_cast<const char*>(&w), 4);
    }
  }
  if (!out) throw DataError("write failed on " + path.string());
}

Recording load_recording(const fs::path& manifest_path, const std::string& recording_id) {
  const auto manifest = read_json(manifest_path);
  for (const auto& entry : manifest.value("recordings", json::array())) {
    if (entry.value("id", std::string()) == recording_id) {
      return recording_from_entry(entry, manifest_path.parent_path());
    }
  }
  throw DataError("recording " + recording_id + " not listed in " + manifest_path.string());
}

Cohort load_cohort(const fs::path& manifest_path) {
  const auto manifest = read_json(manifest_path);
  if (manifest.value("format", std::string()) != kCohortFormat) {
    throw DataError(manifest_path.string() + ": unsupported manifest format");
  }
  Cohort cohort;
  cohort.montage = montage_from_json(manifest.at("montage"));
  if (manifest.contains("synth")) cohort.synth = synth_config_from_json(manifest["synth"]);
  std::set<std::string> ids;
  for (const auto& entry : manifest.at("recordings")) {
    auto rec = recording_from_entry(entry, manifest_path.parent_path());
    if (rec.montage.channels != cohort.montage.channels) {
      throw DataError("recording " + rec.id + " does not use the cohort montage");
    }
    if (!ids.insert(rec.id).second) throw DataError("duplicate recording id " + rec.id);
    rec.montage.name = cohort.montage.name;
    cohort.recordings.push_back(std::move(rec));
  }
  return cohort;
}

void write_cohort(const fs::path& dir, const std::vector<Recording>& recordings,
                  const std::optional<SynthConfig>& synth) {
  if (recordings.empty()) throw std::invalid_argument("cannot write an empty cohort");
  fs::create_directories(dir / "signals");
  json manifest;
  manifest["format"] = kCohortFormat;
  manifest["montage"] = montage_to_json(recordings.front().montage);
  if (synth) manifest["synth"] = synth_config_to_json(*synth);
  json entries = json::array();
  for (const auto& rec : recordings) {
    rec.validate();
    const std::string file = "signals/" + rec.id + ".f32";
    write_signal_file(dir / file, rec.signal);
    json entry{{"id", rec.id},
               {"neonate_id", rec.neonate_id},
               {"fs", rec.sampling_rate_hz},
               {"montage", rec.montage.name},
               {"channels", rec.montage.channels},
               {"n_samples", rec.samples()},
               {"signal_file", file}};
    json tracks = json::array();
    for (const auto& track : rec.annotations) {
      tracks.push_back({{"annotator", track.annotator_id}, {"events", intervals_to_json(track.events)}});
    }
    entry["annotations"] = std::move(tracks);
    if (!rec.true_events.empty()) entry["true_events"] = intervals_to_json(rec.true_events);
    entries.push_back(std::move(entry));
  }
  manifest["recordings"] = std::move(entries);
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError("cannot write manifest in " + dir.string());
}

json montage_to_json(const Montage& m) { return {{"name", m.name}, {"channels", m.channels}}; }

Montage montage_from_json(const json& j) {
  Montage m{j.at("name").get<std::string>(), j.at("channels").get<std::vector<std::string>>()};
  m.validate();
  return m;
}

json synth_config_to_json(const SynthConfig& cfg) {
  return {{"n_neonates", cfg.n_neonates},
          {"seed", cfg.seed},
          {"montage", montage_to_json(cfg.montage)},
          {"minutes_per_neonate", cfg.minutes_per_neonate},
          {"seizure_rate_per_hour", cfg.seizure_rate_per_hour},
          {"sampling_rate_hz", cfg.sampling_rate_hz},
          {"background_gain_uv", range_to_json(cfg.background_gain_uv)},
          {"background_freq_hz", range_to_json(cfg.background_freq_hz)},
          {"seizure_freq_hz", range_to_json(cfg.seizure_freq_hz)},
          {"affected_electrodes", range_to_json(cfg.affected_electrodes)},
          {"seizure_amplitude", range_to_json(cfg.seizure_amplitude)},
          {"event_duration_s", range_to_json(cfg.event_duration_s)},
          {"n_annotators", cfg.n_annotators},
          {"annotator_jitter_s", cfg.annotator_jitter_s}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_neonates") cfg.n_neonates = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "montage") cfg.montage = value.is_string() ? montage_by_name(value.get<std::string>()) : montage_from_json(value);
    else if (key == "minutes_per_neonate") cfg.minutes_per_neonate = value.get<double>();
    else if (key == "seizure_rate_per_hour") cfg.seizure_rate_per_hour = value.get<double>();
    else if (key == "sampling_rate_hz") cfg.sampling_rate_hz = value.get<double>();
    else if (key == "background_gain_uv") cfg.background_gain_uv = range_from_json<double>(value);
    else if (key == "background_freq_hz") cfg.background_freq_hz = range_from_json<double>(value);
    else if (key == "seizure_freq_hz") cfg.seizure_freq_hz = range_from_json<double>(value);
    else if (key == "affected_electrodes") cfg.affected_electrodes = range_from_json<int>(value);
    else if (key == "seizure_amplitude") cfg.seizure_amplitude = range_from_json<double>(value);
    else if (key == "event_duration_s") cfg.event_duration_s = range_from_json<double>(value);
    else if (key == "n_annotators") cfg.n_annotators = value.get<int>();
    else if (key == "annotator_jitter_s") cfg.annotator_jitter_s = value.get<double>();
    else throw std::invalid_argument("unknown synth config key '" + key + "'");
  }
  return cfg;
}

}  // namespace statenet::eeg
