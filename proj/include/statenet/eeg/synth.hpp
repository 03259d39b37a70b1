#pragma once

#include <cstdint>
#include <vector>

#include "statenet/eeg/montage.hpp"
#include "statenet/eeg/recording.hpp"

namespace statenet::eeg {

template <typename T>
struct Range {
  T lo;
  T hi;
};

// Synthetic multi-neonate cohort.
//
// Signals are simulated per electrode and then differenced into the requested
// bipolar montage, so re-deriving the same cohort on another montage (same
// seed) yields the same underlying brain activity.
//
// Per neonate the generator draws a background gain, an AR(2) resonance
// frequency, a seizure rhythm frequency and a seizure amplitude; per event it
// draws the set of affected electrodes. All draws come from a generator
// seeded by (seed, neonate index).
struct SynthConfig {
  int n_neonates = 12;
  std::uint64_t seed = 7;
  Montage montage = bipolar_18();
  double minutes_per_neonate = 40.0;
  double seizure_rate_per_hour = 6.0;
  double sampling_rate_hz = 200.0;

  Range<double> background_gain_uv{15.0, 40.0};
  Range<double> background_freq_hz{0.5, 2.0};
  Range<double> seizure_freq_hz{2.0, 4.0};
  Range<int> affected_electrodes{2, 6};
  // Seizure RMS relative to the neonate's background gain.
  Range<double> seizure_amplitude{2.0, 4.0};
  Range<double> event_duration_s{20.0, 90.0};

  int n_annotators = 3;
  double annotator_jitter_s = 1.5;

  // Throws std::invalid_argument on non-positive sizes or inverted ranges.
  void validate() const;
};

// Electrode-level simulation of one neonate before montage derivation.
struct ElectrodeRecording {
  Matrix<double> potentials;  // electrodes x T, rows ordered as electrode_names()
  std::vector<Interval> events;
  std::vector<std::vector<int>> affected;  // electrode indices per event
  std::vector<AnnotationTrack> annotations;
};

ElectrodeRecording synth_electrodes(const SynthConfig& cfg, int neonate_index);

// Bipolar derivation of electrode potentials into `montage`.
Signal<float> derive_montage(const Matrix<double>& potentials, const Montage& montage);

Recording synth_recording(const SynthConfig& cfg, int neonate_index);

std::vector<Recording> synth_cohort(const SynthConfig& cfg);

}  // namespace statenet::eeg
