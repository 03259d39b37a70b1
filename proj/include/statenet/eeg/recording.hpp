#pragma once

#include <string>
#include <vector>

#include "statenet/core.hpp"
#include "statenet/eeg/montage.hpp"

namespace statenet::eeg {

// Half-open [start_s, end_s) in seconds.
struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
  double overlap(const Interval& other) const;

  bool operator==(const Interval&) const = default;
};

struct AnnotationTrack {
  std::string annotator_id;
  std::vector<Interval> events;

  // Intervals inside [0, duration_s], start < end, pairwise disjoint.
  void validate(double duration_s) const;
};

struct Recording {
  std::string id;
  std::string neonate_id;
  double sampling_rate_hz = 200.0;
  Signal<float> signal;  // C x T, microvolts
  Montage montage;
  std::vector<AnnotationTrack> annotations;
  // Ground-truth seizure intervals; only synthetic recordings carry these.
  std::vector<Interval> true_events;

  Index channels() const { return signal.rows(); }
  Index samples() const { return signal.cols(); }
  double duration_s() const { return static_cast<double>(samples()) / sampling_rate_hz; }

  // Throws DataError when any invariant fails.
  void validate() const;
};

// One fixed-length clip: C x L samples plus its consensus label.
struct EegWindow {
  Signal<float> x;
  int y = 0;
  std::string neonate_id;
  std::string recording_id;
  double offset_s = 0.0;
};

inline constexpr double kDefaultWindowSeconds = 30.0;
inline constexpr double kDefaultMinOverlapSeconds = 1.0;

// 1 iff every track overlaps `span` by at least `min_overlap_s` seconds of
// seizure (inclusive). Throws std::invalid_argument for zero tracks or a
// negative threshold.
int consensus_label(const Interval& span, const std::vector<AnnotationTrack>& tracks,
                    double min_overlap_s = kDefaultMinOverlapSeconds);

// floor(T / (window_s * fs)) consecutive non-overlapping windows; the trailing
// remainder is dropped. Throws std::invalid_argument when window_s * fs is not
// a positive integer.
std::vector<EegWindow> make_windows(const Recording& rec, double window_s = kDefaultWindowSeconds,
                                    double min_overlap_s = kDefaultMinOverlapSeconds);

}  // namespace statenet::eeg
