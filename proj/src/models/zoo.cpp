#include "statenet/models/zoo.hpp"

#include "statenet/diff/checkpoint.hpp"

namespace statenet::models {
using nlohmann::json;

template <typename T>
std::unique_ptr<Classifier<T>> make_classifier(const ModelSpec& spec, Index channels, std::uint64_t seed) {
  spec.validate();
  if (spec.arch == "statenet") return std::make_unique<StateNet<T>>(spec, seed);
  if (spec.arch == "gru") return std::make_unique<GruClassifier<T>>(spec, channels, seed);
  return std::make_unique<TcnClassifier<T>>(spec, channels, seed);
}

template <typename T>
std::unique_ptr<Classifier<T>> make_classifier(const ModelSpec& spec, Index channels, diff::ParamSet<T> params) {
  spec.validate();
  if (spec.arch == "statenet") return std::make_unique<StateNet<T>>(spec, std::move(params));
  if (spec.arch == "gru") return std::make_unique<GruClassifier<T>>(spec, channels, std::move(params));
  return std::make_unique<TcnClassifier<T>>(spec, channels, std::move(params));
}

json model_spec_to_json(const ModelSpec& spec) {
  return {{"arch", spec.arch},
          {"tcn_layers", spec.net.tcn_layers},
          {"kernel_size", spec.net.kernel_size},
          {"hidden_dim", spec.net.hidden_dim},
          {"gat_layers", spec.net.gat_layers},
          {"mlp_hidden", spec.net.mlp_hidden},
          {"residual", spec.net.residual},
          {"gru_hidden", spec.gru_hidden},
          {"input_scale", spec.input_scale}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "arch") spec.arch = value.get<std::string>();
    else if (key == "tcn_layers") spec.net.tcn_layers = value.get<int>();
    else if (key == "kernel_size") spec.net.kernel_size = value.get<int>();
    else if (key == "hidden_dim") spec.net.hidden_dim = value.get<int>();
    else if (key == "gat_layers") spec.net.gat_layers = value.get<int>();
    else if (key == "mlp_hidden") spec.net.mlp_hidden = value.get<int>();
    else if (key == "residual") spec.net.residual = value.get<bool>();
    else if (key == "gru_hidden") spec.gru_hidden = value.get<int>();
    else if (key == "input_scale") spec.input_scale = value.get<double>();
    else throw std::invalid_argument("unknown model config key '" + key + "'");
  }
  spec.validate();
  return spec;
}

template <typename T>
void save_model(const std::filesystem::path& path, const Classifier<T>& model, Index channels,
                const json& extra) {
  json meta = extra.is_object() ? extra : json::object();
  meta["model"] = model_spec_to_json(model.spec());
  meta["channels"] = channels;
  meta["dtype"] = sizeof(T) == 4 ? "float32" : "float64";
  diff::save_checkpoint(path, model.params(), meta);
}

template <typename T>
LoadedModel<T> load_model(const std::filesystem::path& path) {
  LoadedModel<T> out;
  auto params = diff::load_checkpoint<T>(path, &out.meta);
  if (!out.meta.contains("model")) throw DataError(path.string() + ": not a model checkpoint");
  const auto spec = model_spec_from_json(out.meta.at("model"));
  out.channels = out.meta.value("channels", Index{0});
  out.model = make_classifier<T>(spec, out.channels, std::move(params));
  return out;
}

template std::unique_ptr<Classifier<float>> make_classifier(const ModelSpec&, Index, std::uint64_t);
template std::unique_ptr<Classifier<double>> make_classifier(const ModelSpec&, Index, std::uint64_t);
template std::unique_ptr<Classifier<float>> make_classifier(const ModelSpec&, Index, diff::ParamSet<float>);
template std::unique_ptr<Classifier<double>> make_classifier(const ModelSpec&, Index, diff::ParamSet<double>);
template void save_model(const std::filesystem::path&, const Classifier<float>&, Index, const json&);
template void save_model(const std::filesystem::path&, const Classifier<double>&, Index, const json&);
template LoadedModel<float> load_model(const std::filesystem::path&);
template LoadedModel<double> load_model(const std::filesystem::path&);

}  // namespace statenet::models
