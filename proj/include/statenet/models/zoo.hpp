#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "statenet/models/baselines.hpp"
#include "statenet/models/classifier.hpp"
#include "statenet/models/statenet.hpp"

namespace statenet::models {

// Fresh model with Glorot-uniform weights drawn from `seed`. `channels` is the
// training montage size; StateNet ignores it.
template <typename T>
std::unique_ptr<Classifier<T>> make_classifier(const ModelSpec& spec, Index channels, std::uint64_t seed);

template <typename T>
std::unique_ptr<Classifier<T>> make_classifier(const ModelSpec& spec, Index channels, diff::ParamSet<T> params);

nlohmann::json model_spec_to_json(const ModelSpec& spec);
// Rejects unknown keys.
ModelSpec model_spec_from_json(const nlohmann::json& j);

// Model checkpoint: a parameter checkpoint whose meta block holds
// {"model": <spec>, "channels": C, "dtype", ...extra}.
template <typename T>
void save_model(const std::filesystem::path& path, const Classifier<T>& model, Index channels,
                const nlohmann::json& extra = nlohmann::json::object());

template <typename T>
struct LoadedModel {
  std::unique_ptr<Classifier<T>> model;
  nlohmann::json meta;
  Index channels = 0;
};

template <typename T>
LoadedModel<T> load_model(const std::filesystem::path& path);

}  // namespace statenet::models
