#include "statenet/eeg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace statenet::eeg {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPoleRadius = 0.985;
constexpr double kWhiteNoiseFraction = 0.15;
constexpr double kMinEventGapS = 10.0;
constexpr int kBurnIn = 2000;

template <typename T>
void check_range(const Range<T>& r, const char* what, bool allow_zero = false) {
  if (r.lo > r.hi || (allow_zero ? r.lo < T(0) : r.lo <= T(0))) {
    throw std::invalid_argument(std::string("invalid synth range: ") + what);
  }
}

std::mt19937_64 neonate_rng(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// One spike-wave cycle over phase in [0, 1): a sharp spike followed by a slow
// wave of opposite polarity.
double spike_wave_raw(double phase) {
  const double spike = (phase - 0.1) / 0.05;
  const double wave = (phase - 0.45) / 0.15;
  return std::exp(-0.5 * spike * spike) - 0.6 * std::exp(-0.5 * wave * wave);
}

// Scaled to unit RMS over a cycle.
double spike_wave(double phase) {
  static const double rms = [] {
    constexpr int n = 4096;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::pow(spike_wave_raw((i + 0.5) / n), 2);
    return std::sqrt(sum / n);
  }();
  return spike_wave_raw(phase) / rms;
}

std::string neonate_name(int index, int total) {
  char buf[16];
  std::snprintf(buf, sizeof buf, total < 100 ? "N%02d" : "N%03d", index + 1);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_neonates <= 0) throw std::invalid_argument("n_neonates must be positive");
  montage.validate();
  if (!(minutes_per_neonate > 0.0)) throw std::invalid_argument("minutes_per_neonate must be positive");
  if (!(seizure_rate_per_hour >= 0.0)) throw std::invalid_argument("seizure_rate must be non-negative");
  if (!(sampling_rate_hz > 0.0)) throw std::invalid_argument("sampling rate must be positive");
  check_range(background_gain_uv, "background_gain_uv");
  check_range(background_freq_hz, "background_freq_hz");
  check_range(seizure_freq_hz, "seizure_freq_hz");
  check_range(affected_electrodes, "affected_electrodes");
  check_range(seizure_amplitude, "seizure_amplitude");
  check_range(event_duration_s, "event_duration_s");
  if (affected_electrodes.hi > static_cast<int>(electrode_names().size())) {
    throw std::invalid_argument("affected_electrodes exceeds the electrode count");
  }
  if (background_freq_hz.hi >= sampling_rate_hz / 2) {
    throw std::invalid_argument("background frequency above Nyquist");
  }
  if (n_annotators <= 0) throw std::invalid_argument("n_annotators must be positive");
  if (annotator_jitter_s < 0.0 || 2.0 * annotator_jitter_s >= kMinEventGapS) {
    throw std::invalid_argument("annotator jitter out of range");
  }
  for (const auto& label : montage.channels) {
    const auto [a, b] = split_bipolar(label);
    const auto& names = electrode_names();
    if (std::find(names.begin(), names.end(), a) == names.end() ||
        std::find(names.begin(), names.end(), b) == names.end()) {
      throw std::invalid_argument("montage channel " + label + " uses an unsimulated electrode");
    }
  }
}

ElectrodeRecording synth_electrodes(const SynthConfig& cfg, int neonate_index) {
  auto rng = neonate_rng(cfg.seed, neonate_index);
  const double fs = cfg.sampling_rate_hz;
  const auto n_samples = static_cast<Index>(std::llround(cfg.minutes_per_neonate * 60.0 * fs));
  const double duration = static_cast<double>(n_samples) / fs;
  const auto n_electrodes = static_cast<Index>(electrode_names().size());

  const double gain = uniform(rng, cfg.background_gain_uv.lo, cfg.background_gain_uv.hi);
  const double bg_freq = uniform(rng, cfg.background_freq_hz.lo, cfg.background_freq_hz.hi);
  const double sz_freq = uniform(rng, cfg.seizure_freq_hz.lo, cfg.seizure_freq_hz.hi);
  const double sz_amp = uniform(rng, cfg.seizure_amplitude.lo, cfg.seizure_amplitude.hi);

  // AR(2) resonator at bg_freq, scaled to unit stationary variance.
  const double a1 = 2.0 * kPoleRadius * std::cos(2.0 * kPi * bg_freq / fs);
  const double a2 = -kPoleRadius * kPoleRadius;
  const double gamma0 = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
  const double innovation_sd = 1.0 / std::sqrt(gamma0);

  ElectrodeRecording out;
  out.potentials.resize(n_electrodes, n_samples);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index e = 0; e < n_electrodes; ++e) {
    const double electrode_gain = gain * uniform(rng, 0.8, 1.2);
    double prev1 = 0.0;
    double prev2 = 0.0;
    for (Index t = -kBurnIn; t < n_samples; ++t) {
      const double next = a1 * prev1 + a2 * prev2 + innovation_sd * normal(rng);
      prev2 = prev1;
      prev1 = next;
      if (t >= 0) {
        out.potentials(e, t) = electrode_gain * (next + kWhiteNoiseFraction * normal(rng));
      }
    }
  }

  // Event onsets: exponential gaps after a refractory period.
  if (cfg.seizure_rate_per_hour > 0.0) {
    std::exponential_distribution<double> gap(cfg.seizure_rate_per_hour / 3600.0);
    double cursor = 0.0;
    for (;;) {
      const double start = cursor + gap(rng);
      const double length = uniform(rng, cfg.event_duration_s.lo, cfg.event_duration_s.hi);
      if (start + length > duration - 1.0) break;
      out.events.push_back({start, start + length});
      cursor = start + length + kMinEventGapS;
    }
  }

  std::vector<int> electrodes(static_cast<std::size_t>(n_electrodes));
  std::iota(electrodes.begin(), electrodes.end(), 0);
  for (const auto& ev : out.events) {
    const int count = std::uniform_int_distribution<int>(cfg.affected_electrodes.lo,
                                                         cfg.affected_electrodes.hi)(rng);
    std::shuffle(electrodes.begin(), electrodes.end(), rng);
    std::vector<int> affected(electrodes.begin(), electrodes.begin() + count);
    std::sort(affected.begin(), affected.end());

    const double freq = sz_freq * uniform(rng, 0.9, 1.1);
    const double ramp_up = std::min(2.0, ev.length() / 4.0);
    const double ramp_down = std::min(2.0, ev.length() / 4.0);
    const auto first = static_cast<Index>(std::ceil(ev.start_s * fs));
    const auto last = std::min(n_samples, static_cast<Index>(std::ceil(ev.end_s * fs)));
    for (int e : affected) {
      const double amplitude = sz_amp * gain * uniform(rng, 0.6, 1.0);
      const double lag = uniform(rng, 0.0, 0.03);
      for (Index t = first; t < last; ++t) {
        const double tau = static_cast<double>(t) / fs - ev.start_s;
        const double envelope = std::clamp(std::min(tau / ramp_up, (ev.length() - tau) / ramp_down), 0.0, 1.0);
        const double cycles = freq * (tau - lag);
        const double phase = cycles - std::floor(cycles);
        out.potentials(e, t) += amplitude * envelope * spike_wave(phase);
      }
    }
    out.affected.push_back(std::move(affected));
  }

  for (int a = 0; a < cfg.n_annotators; ++a) {
    AnnotationTrack track;
    track.annotator_id = "A" + std::to_string(a + 1);
    for (const auto& ev : out.events) {
      const double s = std::clamp(ev.start_s + uniform(rng, -cfg.annotator_jitter_s, cfg.annotator_jitter_s), 0.0, duration);
      const double e = std::clamp(ev.end_s + uniform(rng, -cfg.annotator_jitter_s, cfg.annotator_jitter_s), 0.0, duration);
      if (s < e) track.events.push_back({s, e});
    }
    out.annotations.push_back(std::move(track));
  }
  return out;
}

Signal<float> derive_montage(const Matrix<double>& potentials, const Montage& montage) {
  const auto& names = electrode_names();
  std::unordered_map<std::string, Index> row;
  for (std::size_t i = 0; i < names.size(); ++i) row[names[i]] = static_cast<Index>(i);

  Signal<float> signal(montage.size(), potentials.cols());
  for (Index c = 0; c < montage.size(); ++c) {
    const auto [a, b] = split_bipolar(montage.channels[static_cast<std::size_t>(c)]);
    const auto ia = row.find(a);
    const auto ib = row.find(b);
    if (ia == row.end() || ib == row.end()) {
      throw std::invalid_argument("cannot derive channel " + montage.channels[static_cast<std::size_t>(c)]);
    }
    signal.row(c) = (potentials.row(ia->second) - potentials.row(ib->second)).cast<float>();
  }
  return signal;
}

Recording synth_recording(const SynthConfig& cfg, int neonate_index) {
  cfg.validate();
  auto electrodes = synth_electrodes(cfg, neonate_index);
  Recording rec;
  rec.neonate_id = neonate_name(neonate_index, cfg.n_neonates);
  rec.id = rec.neonate_id;
  rec.sampling_rate_hz = cfg.sampling_rate_hz;
  rec.montage = cfg.montage;
  rec.signal = derive_montage(electrodes.potentials, cfg.montage);
  rec.annotations = std::move(electrodes.annotations);
  rec.true_events = std::move(electrodes.events);
  return rec;
}

std::vector<Recording> synth_cohort(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<Recording> cohort;
  cohort.reserve(static_cast<std::size_t>(cfg.n_neonates));
  for (int i = 0; i < cfg.n_neonates; ++i) cohort.push_back(synth_recording(cfg, i));
  return cohort;
}

}  // namespace statenet::eeg
