#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "statenet/diff/params.hpp"

namespace statenet::diff {

// A checkpoint is two files:
//
//   <path>       JSON index
//                { "format": "statenet-params/1",
//                  "blob": "<file name>.bin",
//                  "params": [{"name", "shape": [r, c], "dtype", "offset",
//                              "trainable"}, ...],
//                  "meta": {...} }
//   <path>.bin   raw little-endian values at the listed byte offsets, each
//                tensor row-major
//
// dtype is "float32" or "float64", matching the scalar type the tensors were
// saved from, so a save/load round trip at the same type is bit-exact.

inline constexpr const char* kCheckpointFormat = "statenet-params/1";

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params,
                     const nlohmann::json& meta);

// Values are converted to T when the stored dtype differs.
template <typename T>
ParamSet<T> load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

nlohmann::json read_checkpoint_index(const std::filesystem::path& path);

std::filesystem::path checkpoint_blob_path(const std::filesystem::path& path);

// FNV-1a over the index and blob bytes.
std::uint64_t checkpoint_hash(const std::filesystem::path& path);

// Copies index and blob; the copied index points at the new blob name.
void copy_checkpoint(const std::filesystem::path& from, const std::filesystem::path& to);

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

}  // namespace statenet::diff
