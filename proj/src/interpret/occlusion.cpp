#include "statenet/interpret/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace statenet::interpret {
using nlohmann::json;

OcclusionMode occlusion_mode_from_string(const std::string& name) {
  if (name == "temporal") return OcclusionMode::temporal;
  if (name == "channel-temporal" || name == "channel_temporal") return OcclusionMode::channel_temporal;
  throw std::invalid_argument("unknown occlusion mode '" + name + "'");
}

std::string to_string(OcclusionMode mode) {
  return mode == OcclusionMode::temporal ? "temporal" : "channel-temporal";
}

Index OcclusionMap::position_count(Index length, Index occluder, Index stride) {
  if (occluder < 1 || stride < 1) throw std::invalid_argument("occluder length and stride must be positive");
  if (occluder > length) throw std::invalid_argument("occluder longer than the window");
  return (length - occluder) / stride + 1;
}

template <typename T>
OcclusionMap occlusion_map(const models::Classifier<T>& model, const Signal<T>& x, Index occluder, Index stride,
                           OcclusionMode mode, double sampling_rate_hz) {
  OcclusionMap map;
  map.mode = mode;
  map.length = x.cols();
  map.occluder = occluder;
  map.stride = stride;
  map.sampling_rate_hz = sampling_rate_hz;
  const Index positions = OcclusionMap::position_count(x.cols(), occluder, stride);
  const double base = static_cast<double>(model.predict(x));
  map.base_probability = base;
  const Index rows = mode == OcclusionMode::temporal ? 1 : x.rows();
  map.heat.resize(rows, positions);

  Signal<T> work = x;
  for (Index r = 0; r < rows; ++r) {
    const Index first_channel = mode == OcclusionMode::temporal ? 0 : r;
    const Index channels = mode == OcclusionMode::temporal ? x.rows() : 1;
    for (Index p = 0; p < positions; ++p) {
      auto span = work.block(first_channel, p * stride, channels, occluder);
      const auto original = x.block(first_channel, p * stride, channels, occluder);
      if ((original.array() == T(0)).all()) {
        map.heat(r, p) = 0.0;
        continue;
      }
      span.setZero();
      map.heat(r, p) = base - static_cast<double>(model.predict(work));
      span = original;
    }
  }
  if (!map.heat.allFinite()) throw std::runtime_error("occlusion map has non-finite entries");
  return map;
}

namespace {

std::string channel_label(const OcclusionMap& map, const std::vector<std::string>& names, Index r) {
  if (map.mode == OcclusionMode::temporal) return "all";
  if (static_cast<std::size_t>(r) < names.size()) return names[static_cast<std::size_t>(r)];
  return std::to_string(r);
}

}  // namespace

std::string occlusion_csv(const OcclusionMap& map, const std::vector<std::string>& channel_names) {
  std::ostringstream out;
  out.precision(17);
  out << "position_s,channel,heat\n";
  for (Index r = 0; r < map.heat.rows(); ++r) {
    for (Index p = 0; p < map.positions(); ++p) {
      out << map.position_s(p) << ',' << channel_label(map, channel_names, r) << ',' << map.heat(r, p) << '\n';
    }
  }
  return out.str();
}

json occlusion_summary(const OcclusionMap& map, const std::vector<std::string>& channel_names) {
  Index r = 0;
  Index p = 0;
  const double peak = map.heat.maxCoeff(&r, &p);
  return {{"mode", to_string(map.mode)},
          {"length", map.length},
          {"occluder_samples", map.occluder},
          {"stride_samples", map.stride},
          {"sampling_rate_hz", map.sampling_rate_hz},
          {"positions", map.positions()},
          {"base_probability", map.base_probability},
          {"argmax",
           {{"channel", channel_label(map, channel_names, r)},
            {"start_s", map.position_s(p)},
            {"end_s", map.position_s(p) + static_cast<double>(map.occluder) / map.sampling_rate_hz},
            {"heat", peak}}}};
}

void write_heatmap_ppm(const std::filesystem::path& path, const OcclusionMap& map, int cell) {
  if (cell < 1) throw std::invalid_argument("heatmap cell size must be positive");
  const Index width = map.positions() * cell;
  const Index height = map.heat.rows() * cell;
  const double scale = std::max(map.heat.cwiseAbs().maxCoeff(), 1e-300);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const double v = std::clamp(map.heat(y / cell, x / cell) / scale, -1.0, 1.0);
      const auto fade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - std::abs(v))));
      const unsigned char rgb[3] = {v >= 0 ? static_cast<unsigned char>(255) : fade, fade,
                                    v <= 0 ? static_cast<unsigned char>(255) : fade};
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

template OcclusionMap occlusion_map(const models::Classifier<float>&, const Signal<float>&, Index, Index,
                                    OcclusionMode, double);
template OcclusionMap occlusion_map(const models::Classifier<double>&, const Signal<double>&, Index, Index,
                                    OcclusionMode, double);

}  // namespace statenet::interpret
