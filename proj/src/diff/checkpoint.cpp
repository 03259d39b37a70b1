#include "statenet/diff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace statenet::diff {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
constexpr const char* dtype_name() {
  return sizeof(T) == 4 ? "float32" : "float64";
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

template <typename Stored, typename T>
void decode(const std::string& blob, std::size_t offset, Matrix<T>& out) {
  const std::size_t need = sizeof(Stored) * static_cast<std::size_t>(out.size());
  if (offset + need > blob.size()) throw DataError("checkpoint blob too short");
  for (Index r = 0, k = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c, ++k) {
      Stored v;
      std::memcpy(&v, blob.data() + offset + sizeof(Stored) * static_cast<std::size_t>(k), sizeof v);
      out(r, c) = static_cast<T>(v);
    }
  }
}

}  // namespace

fs::path checkpoint_blob_path(const fs::path& path) {
  return path.parent_path() / (path.filename().string() + ".bin");
}

template <typename T>
void save_checkpoint(const fs::path& path, const ParamSet<T>& params, const json& meta) {
  std::string blob;
  json entries = json::array();
  for (const auto& p : params) {
    entries.push_back({{"name", p.name},
                       {"shape", p.shape()},
                       {"dtype", dtype_name<T>()},
                       {"offset", blob.size()},
                       {"trainable", p.trainable}});
    for (Index r = 0; r < p.value.rows(); ++r) {
      for (Index c = 0; c < p.value.cols(); ++c) {
        const T v = p.value(r, c);
        blob.append(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
  }
  const auto blob_path = checkpoint_blob_path(path);
  json index{{"format", kCheckpointFormat},
             {"blob", blob_path.filename().string()},
             {"params", std::move(entries)},
             {"meta", meta}};
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  write_bytes(blob_path, blob);
  write_bytes(path, index.dump(2) + "\n");
}

json read_checkpoint_index(const fs::path& path) {
  json index;
  try {
    index = json::parse(read_bytes(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (index.value("format", std::string()) != kCheckpointFormat) {
    throw DataError(path.string() + ": not a parameter checkpoint");
  }
  return index;
}

template <typename T>
ParamSet<T> load_checkpoint(const fs::path& path, json* meta) {
  const auto index = read_checkpoint_index(path);
  const auto blob = read_bytes(path.parent_path() / index.at("blob").get<std::string>());
  ParamSet<T> params;
  for (const auto& entry : index.at("params")) {
    const auto shape = entry.at("shape").get<std::vector<Index>>();
    if (shape.size() != 2) throw DataError("checkpoint tensor shape must have two extents");
    const Index i = params.add(entry.at("name").get<std::string>(), shape[0], shape[1],
                               entry.value("trainable", true));
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto dtype = entry.at("dtype").get<std::string>();
    if (dtype == "float32") decode<float>(blob, offset, params.value(i));
    else if (dtype == "float64") decode<double>(blob, offset, params.value(i));
    else throw DataError("unsupported dtype " + dtype);
  }
  if (meta) *meta = index.value("meta", json::object());
  return params;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::uint64_t checkpoint_hash(const fs::path& path) {
  const auto index = read_checkpoint_index(path);
  const auto state = fnv1a(read_bytes(path));
  return fnv1a(read_bytes(path.parent_path() / index.at("blob").get<std::string>()), state);
}

void copy_checkpoint(const fs::path& from, const fs::path& to) {
  auto index = read_checkpoint_index(from);
  const auto blob = read_bytes(from.parent_path() / index.at("blob").get<std::string>());
  const auto blob_path = checkpoint_blob_path(to);
  index["blob"] = blob_path.filename().string();
  if (!to.parent_path().empty()) fs::create_directories(to.parent_path());
  write_bytes(blob_path, blob);
  write_bytes(to, index.dump(2) + "\n");
}

template void save_checkpoint(const fs::path&, const ParamSet<float>&, const json&);
template void save_checkpoint(const fs::path&, const ParamSet<double>&, const json&);
template ParamSet<float> load_checkpoint(const fs::path&, json*);
template ParamSet<double> load_checkpoint(const fs::path&, json*);

}  // namespace statenet::diff
