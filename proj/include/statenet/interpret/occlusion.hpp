#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "statenet/models/classifier.hpp"

namespace statenet::interpret {

enum class OcclusionMode { temporal, channel_temporal };

OcclusionMode occlusion_mode_from_string(const std::string& name);
std::string to_string(OcclusionMode mode);

inline constexpr Index kDefaultOccluderSamples = 200;
inline constexpr Index kDefaultOccluderStride = 100;

// heat(r, p) = p(x) - p(x with span p zeroed); one row in temporal mode, one
// row per channel in channel-temporal mode. Positive heat marks evidence for
// the seizure class.
struct OcclusionMap {
  OcclusionMode mode = OcclusionMode::temporal;
  Matrix<double> heat;  // rows x P
  Index length = 0;     // L
  Index occluder = 0;
  Index stride = 0;
  double sampling_rate_hz = 200.0;
  double base_probability = 0.0;

  Index positions() const { return heat.cols(); }
  double position_s(Index p) const { return static_cast<double>(p * stride) / sampling_rate_hz; }
  // Number of positions floor((L - occluder) / stride) + 1.
  static Index position_count(Index length, Index occluder, Index stride);
};

// Throws std::invalid_argument unless 1 <= occluder <= L and stride >= 1.
template <typename T>
OcclusionMap occlusion_map(const models::Classifier<T>& model, const Signal<T>& x,
                           Index occluder = kDefaultOccluderSamples, Index stride = kDefaultOccluderStride,
                           OcclusionMode mode = OcclusionMode::temporal, double sampling_rate_hz = 200.0);

// position_s,channel,heat; channel reads "all" in temporal mode.
std::string occlusion_csv(const OcclusionMap& map, const std::vector<std::string>& channel_names);

// Argmax region and the map's dimensions.
nlohmann::json occlusion_summary(const OcclusionMap& map, const std::vector<std::string>& channel_names);

// Binary PPM heatmap, `cell` pixels per entry: red for positive heat, blue for
// negative, scaled by the largest magnitude.
void write_heatmap_ppm(const std::filesystem::path& path, const OcclusionMap& map, int cell = 4);

}  // namespace statenet::interpret
