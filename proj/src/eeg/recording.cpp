#include "statenet/eeg/recording.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace statenet::eeg {

double Interval::overlap(const Interval& other) const {
  return std::max(0.0, std::min(end_s, other.end_s) - std::max(start_s, other.start_s));
}

void AnnotationTrack::validate(double duration_s) const {
  auto sorted = events;
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& ev = sorted[i];
    if (!(ev.start_s < ev.end_s)) {
      throw DataError("annotator " + annotator_id + ": event with start >= end");
    }
    if (ev.start_s < 0.0 || ev.end_s > duration_s + 1e-9) {
      throw DataError("annotator " + annotator_id + ": event outside the recording");
    }
    if (i > 0 && ev.start_s < sorted[i - 1].end_s) {
      throw DataError("annotator " + annotator_id + ": overlapping events");
    }
  }
}

void Recording::validate() const {
  if (!(sampling_rate_hz > 0.0)) throw DataError("recording " + id + ": sampling rate must be positive");
  if (samples() < 1) throw DataError("recording " + id + ": empty signal");
  try {
    montage.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError("recording " + id + ": " + e.what());
  }
  if (channels() != montage.size()) {
    throw DataError("recording " + id + ": signal has " + std::to_string(channels()) +
                    " rows but the montage lists " + std::to_string(montage.size()) + " channels");
  }
  if (!signal.allFinite()) throw DataError("recording " + id + ": non-finite sample");
  for (const auto& track : annotations) track.validate(duration_s());
}

int consensus_label(const Interval& span, const std::vector<AnnotationTrack>& tracks,
                    double min_overlap_s) {
  if (tracks.empty()) throw std::invalid_argument("consensus_label needs at least one annotation track");
  if (min_overlap_s < 0.0) throw std::invalid_argument("min_overlap_s must be non-negative");
  for (const auto& track : tracks) {
    double covered = 0.0;
    for (const auto& ev : track.events) covered += span.overlap(ev);
    // A track with no seizure inside the span never votes positive, even at a
    // zero threshold.
    if (!(covered > 0.0) || covered < min_overlap_s) return 0;
  }
  return 1;
}

std::vector<EegWindow> make_windows(const Recording& rec, double window_s, double min_overlap_s) {
  const double exact = window_s * rec.sampling_rate_hz;
  const double rounded = std::round(exact);
  if (!(rounded >= 1.0) || std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact)) {
    throw std::invalid_argument("window_s * fs must be a positive integer number of samples");
  }
  const auto length = static_cast<Index>(rounded);
  const Index count = rec.samples() / length;

  std::vector<EegWindow> windows;
  windows.reserve(static_cast<std::size_t>(count));
  for (Index w = 0; w < count; ++w) {
    EegWindow win;
    win.x = rec.signal.middleCols(w * length, length);
    win.offset_s = static_cast<double>(w * length) / rec.sampling_rate_hz;
    const Interval span{win.offset_s, static_cast<double>((w + 1) * length) / rec.sampling_rate_hz};
    win.y = consensus_label(span, rec.annotations, min_overlap_s);
    win.neonate_id = rec.neonate_id;
    win.recording_id = rec.id;
    windows.push_back(std::move(win));
  }
  return windows;
}

}  // namespace statenet::eeg
