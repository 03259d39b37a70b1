#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <limits>
#include <random>
#include <set>

#include <json.hpp>

#include "statenet/eeg/folds.hpp"
#include "statenet/eeg/manifest.hpp"
#include "statenet/eeg/recording.hpp"
#include "statenet/eeg/synth.hpp"

using namespace statenet;
using namespace statenet::eeg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("statenet_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Hand-written manifest with one recording and a raw float buffer.
fs::path write_manual(const fs::path& dir, const std::vector<std::string>& channels, Index declared_samples,
                      const std::vector<float>& samples) {
  const json manifest = {{"format", kCohortFormat},
                         {"montage", {{"name", "custom"}, {"channels", channels}}},
                         {"recordings",
                          {{{"id", "r1"},
                            {"neonate_id", "n1"},
                            {"fs", 200.0},
                            {"channels", channels},
                            {"n_samples", declared_samples},
                            {"signal_file", "r1.f32"},
                            {"annotations", json::array()}}}}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2);
  std::ofstream out(dir / "r1.f32", std::ios::binary);
  out.write(reinterpret_cast<const char*>(samples.data()), static_cast<std::streamsize>(samples.size() * 4));
  return dir / "manifest.json";
}

Recording flat_recording(Index samples, std::vector<AnnotationTrack> tracks = {}) {
  Recording rec;
  rec.id = "r";
  rec.neonate_id = "n";
  rec.montage = bipolar_3();
  rec.signal = Signal<float>::Zero(3, samples);
  rec.annotations = std::move(tracks);
  return rec;
}

double rms(const Matrix<double>& m, Index row, Index from, Index to) {
  return std::sqrt(m.row(row).segment(from, to - from).squaredNorm() / static_cast<double>(to - from));
}

}  // namespace

TEST_CASE("load_recording reads a 3x12000 float32 file") {
  const auto dir = scratch("load_ok");
  std::vector<float> samples(3 * 12000);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<float>(i % 97) - 48.0f;
  const auto manifest = write_manual(dir, {"C3-P3", "C4-P4", "P3-P4"}, 12000, samples);
  CHECK(fs::file_size(dir / "r1.f32") == 144000);
  const auto rec = load_recording(manifest, "r1");
  CHECK(rec.signal.rows() == 3);
  CHECK(rec.signal.cols() == 12000);
  // Row-major C x T.
  CHECK(rec.signal(1, 5) == samples[12000 + 5]);
  CHECK(rec.signal(2, 11999) == samples.back());
}

TEST_CASE("load_recording rejects a NaN sample") {
  const auto dir = scratch("load_nan");
  std::vector<float> samples(3 * 200, 1.0f);
  samples[321] = std::numeric_limits<float>::quiet_NaN();
  const auto manifest = write_manual(dir, {"C3-P3", "C4-P4", "P3-P4"}, 200, samples);
  CHECK_THROWS_WITH_AS(load_recording(manifest, "r1"), doctest::Contains("non-finite sample"), DataError);
}

TEST_CASE("load_recording refuses a file sized for 18 rows when 3 are declared") {
  const auto dir = scratch("load_shape");
  const std::vector<float> samples(18 * 200, 0.5f);
  const auto manifest = write_manual(dir, {"C3-P3", "C4-P4", "P3-P4"}, 200, samples);
  CHECK_THROWS_WITH_AS(load_recording(manifest, "r1"), doctest::Contains("shape mismatch"), DataError);
}

TEST_CASE("load_recording reports a missing signal file") {
  const auto dir = scratch("load_missing");
  const auto manifest = write_manual(dir, {"C3-P3"}, 10, std::vector<float>(10, 0.0f));
  fs::remove(dir / "r1.f32");
  CHECK_THROWS_AS(load_recording(manifest, "r1"), DataError);
}

TEST_CASE("window counts drop the trailing remainder") {
  for (auto [samples, expected] : {std::pair<Index, std::size_t>{18000, 3}, {5999, 0}, {12001, 2}, {6000, 1}}) {
    const auto windows = make_windows(flat_recording(samples, {{"a", {}}}));
    CHECK(windows.size() == expected);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(windows[i].x.cols() == 6000);
      CHECK(windows[i].offset_s == doctest::Approx(30.0 * static_cast<double>(i)));
    }
  }
}

TEST_CASE("consensus requires every annotator") {
  const Interval span{0.0, 30.0};
  const AnnotationTrack full{"a", {{0.0, 30.0}}};
  const AnnotationTrack empty{"c", {}};
  CHECK(consensus_label(span, {full, full, full}) == 1);
  CHECK(consensus_label(span, {full, full, empty}) == 0);
  // Exactly the minimum overlap counts.
  const AnnotationTrack edge{"e", {{29.0, 45.0}}};
  CHECK(consensus_label(span, {edge, edge, edge}, 1.0) == 1);
  const AnnotationTrack short_edge{"s", {{29.5, 45.0}}};
  CHECK(consensus_label(span, {edge, edge, short_edge}, 1.0) == 0);
  CHECK_THROWS_AS(consensus_label(span, {full}, -1.0), std::invalid_argument);
}

TEST_CASE("adding an annotator never turns a negative window positive") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<AnnotationTrack> tracks;
    for (int a = 0; a < 3; ++a) {
      const double s = u(rng);
      tracks.push_back({std::to_string(a), {{s, s + u(rng) / 2}}});
    }
    const Interval span{15.0, 45.0};
    const int before = consensus_label(span, {tracks[0], tracks[1]});
    const int after = consensus_label(span, tracks);
    CHECK(after <= before);
  }
}

TEST_CASE("patient folds") {
  std::vector<std::string> ids;
  for (int i = 0; i < 79; ++i) ids.push_back("N" + std::to_string(i));
  const auto split = patient_folds(ids, 4, 11);
  std::multiset<std::size_t> sizes;
  std::multiset<std::string> tested;
  for (const auto& f : split.folds) {
    sizes.insert(f.test.size());
    tested.insert(f.test.begin(), f.test.end());
    for (const auto& id : f.test) CHECK(std::find(f.train.begin(), f.train.end(), id) == f.train.end());
    CHECK(f.train.size() + f.test.size() == 79);
  }
  CHECK(sizes == std::multiset<std::size_t>{19, 20, 20, 20});
  CHECK(tested == std::multiset<std::string>(ids.begin(), ids.end()));
  split.validate(ids);

  const auto again = patient_folds(ids, 4, 11);
  for (std::size_t k = 0; k < 4; ++k) CHECK(again.folds[k].test == split.folds[k].test);

  const auto tiny = patient_folds({"a", "b", "c", "d"}, 4, 1);
  for (const auto& f : tiny.folds) CHECK(f.test.size() == 1);
  CHECK_THROWS_AS(patient_folds(ids, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(patient_folds({"a", "b"}, 3, 1), std::invalid_argument);
}

TEST_CASE("synthesis is deterministic") {
  SynthConfig cfg;
  cfg.n_neonates = 2;
  cfg.minutes_per_neonate = 3.0;
  const auto a = synth_cohort(cfg);
  const auto b = synth_cohort(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].signal.rows() == 18);
    CHECK(std::memcmp(a[i].signal.data(), b[i].signal.data(), a[i].signal.size() * sizeof(float)) == 0);
    CHECK(a[i].true_events == b[i].true_events);
  }
  cfg.seed = 8;
  CHECK(synth_cohort(cfg)[0].signal != a[0].signal);
}

TEST_CASE("seizure rate 0 gives only negative windows") {
  SynthConfig cfg;
  cfg.n_neonates = 3;
  cfg.minutes_per_neonate = 5.0;
  cfg.seizure_rate_per_hour = 0.0;
  for (const auto& rec : synth_cohort(cfg)) {
    CHECK(rec.true_events.empty());
    for (const auto& w : make_windows(rec)) CHECK(w.y == 0);
  }
}

TEST_CASE("a single affected electrode changes only the channels that use it") {
  SynthConfig cfg;
  cfg.n_neonates = 1;
  cfg.minutes_per_neonate = 20.0;
  cfg.seizure_rate_per_hour = 12.0;
  cfg.affected_electrodes = {1, 1};
  const auto rec = synth_electrodes(cfg, 0);
  REQUIRE(!rec.events.empty());
  const double fs_hz = cfg.sampling_rate_hz;
  const auto& ev = rec.events.front();
  const int hit = rec.affected.front().front();
  // Core of the event, clear of the amplitude ramps, against the quiet lead-in.
  const Index in_from = static_cast<Index>((ev.start_s + 3.0) * fs_hz);
  const Index in_to = static_cast<Index>((ev.end_s - 3.0) * fs_hz);
  Index out_from = 0, out_to = static_cast<Index>(ev.start_s * fs_hz);
  if (out_to - out_from < 2000) {
    out_from = static_cast<Index>(ev.end_s * fs_hz);
    out_to = rec.potentials.cols();
    for (const auto& other : rec.events) {
      if (other.start_s > ev.end_s) out_to = std::min(out_to, static_cast<Index>(other.start_s * fs_hz));
    }
  }
  REQUIRE(out_to - out_from >= 2000);

  const auto montage = derive_montage(rec.potentials, cfg.montage);
  const Matrix<double> bipolar = montage.cast<double>();
  const auto& names = electrode_names();
  int changed = 0, steady = 0;
  for (Index c = 0; c < montage.rows(); ++c) {
    const auto [a, b] = split_bipolar(cfg.montage.channels[static_cast<std::size_t>(c)]);
    const bool uses = a == names[static_cast<std::size_t>(hit)] || b == names[static_cast<std::size_t>(hit)];
    const double ratio = rms(bipolar, c, in_from, in_to) / rms(bipolar, c, out_from, out_to);
    if (uses) {
      CHECK(ratio > 1.5);
      ++changed;
    } else {
      CHECK(ratio > 0.6);
      CHECK(ratio < 1.6);
      ++steady;
    }
  }
  CHECK(changed >= 1);
  CHECK(steady >= 1);
}

TEST_CASE("cohort round trip through manifest") {
  SynthConfig cfg;
  cfg.n_neonates = 2;
  cfg.minutes_per_neonate = 2.0;
  cfg.montage = bipolar_3();
  const auto recs = synth_cohort(cfg);
  const auto dir = scratch("roundtrip");
  write_cohort(dir, recs, cfg);
  const auto cohort = load_cohort(dir / "manifest.json");
  REQUIRE(cohort.recordings.size() == 2);
  CHECK(cohort.montage.channels == std::vector<std::string>{"C3-P3", "C4-P4", "P3-P4"});
  CHECK(cohort.recordings[1].signal == recs[1].signal);
  CHECK(cohort.recordings[1].annotations.size() == recs[1].annotations.size());
  REQUIRE(cohort.synth.has_value());
  CHECK(cohort.synth->seed == cfg.seed);
}
