#include "common.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "statenet/diff/checkpoint.hpp"
#include "statenet/models/zoo.hpp"

namespace statenet::cli {

Log::Log(const fs::path& file, std::ostream& echo) : file_(file, std::ios::app), echo_(echo) {
  if (!file_) throw std::runtime_error("cannot open " + file.string());
}

void Log::operator()(const std::string& line) {
  file_ << line << '\n';
  file_.flush();
  echo_ << line << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t config_hash(const json& resolved) {
  json copy = resolved;
  copy.erase("out");
  copy.erase("force");
  return diff::fnv1a(copy.dump());
}

fs::path prepare_run_dir(const std::string& out_flag, const std::string& command, std::uint64_t hash, bool force) {
  fs::path dir;
  if (!out_flag.empty()) {
    dir = out_flag;
  } else {
    const char* root = std::getenv(kRunsDirEnv);
    dir = fs::path(root && *root ? root : "runs") / (command + "-" + hex(hash).substr(0, 12));
  }
  if (fs::exists(dir) && !fs::is_directory(dir)) throw std::runtime_error(dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw std::runtime_error("output directory " + dir.string() + " is not empty (pass --force to replace it)");
    for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
  }
  fs::create_directories(dir);
  return dir;
}

void write_config(const fs::path& run_dir, json resolved, std::uint64_t hash) {
  resolved["config_hash"] = hex(hash);
  write_json(run_dir / "config.json", resolved);
}

fs::path manifest_path(const std::string& data) {
  if (data.empty()) throw std::invalid_argument("no cohort given (--data)");
  fs::path p(data);
  if (fs::is_directory(p)) p /= "manifest.json";
  if (!fs::exists(p)) throw std::runtime_error("cohort manifest " + p.string() + " not found");
  return fs::absolute(p).lexically_normal();
}

json load_config_file(const std::string& path, const std::vector<std::string>& allowed) {
  if (path.empty()) return json::object();
  json j = read_json(path);
  if (!j.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument(path + ": unknown config key '" + key + "'");
    }
  }
  return j;
}

json merged(json base, const json& patch) {
  if (!base.is_object() || !patch.is_object()) return patch;
  for (const auto& [key, value] : patch.items()) {
    base[key] = base.contains(key) ? merged(base[key], value) : value;
  }
  return base;
}

void ModelFlags::add(CLI::App& app, bool with_arch) {
  if (with_arch) {
    arch_opt = app.add_option("--arch", arch, "Architecture")->check(CLI::IsMember({"statenet", "gru", "tcn"}));
  }
  options = {
      app.add_option("--tcn-layers", tcn_layers, "Temporal convolution layers"),
      app.add_option("--kernel-size", kernel_size, "Temporal kernel size"),
      app.add_option("--hidden-dim", hidden_dim, "Hidden width d"),
      app.add_option("--gat-layers", gat_layers, "Graph-attention layers"),
      app.add_option("--mlp-hidden", mlp_hidden, "Readout MLP width"),
      app.add_option("--gru-hidden", gru_hidden, "GRU baseline hidden size"),
      app.add_option("--input-scale", input_scale, "Factor applied to microvolt inputs"),
      app.add_flag("--residual", residual, "Residual connections in the temporal stack"),
  };
}

void ModelFlags::apply(models::ModelSpec& spec) const {
  if (given(arch_opt)) spec.arch = arch;
  if (given(options[0])) spec.net.tcn_layers = tcn_layers;
  if (given(options[1])) spec.net.kernel_size = kernel_size;
  if (given(options[2])) spec.net.hidden_dim = hidden_dim;
  if (given(options[3])) spec.net.gat_layers = gat_layers;
  if (given(options[4])) spec.net.mlp_hidden = mlp_hidden;
  if (given(options[5])) spec.gru_hidden = gru_hidden;
  if (given(options[6])) spec.input_scale = input_scale;
  if (given(options[7])) spec.net.residual = residual;
  spec.validate();
}

void TrainFlags::add(CLI::App& app) {
  seed_opt = app.add_option("--seed", seed, "Run seed (splits, initialisation, batch order)");
  lambda_opt = app.add_option("--lambda", lambda, "L2 weight");
  lr_opt = app.add_option("--lr", learning_rate, "Learning rate");
  batch_opt = app.add_option("--batch-size", batch_size, "Minibatch size");
  epochs_opt = app.add_option("--epochs", max_epochs, "Maximum epochs");
  patience_opt = app.add_option("--patience", patience, "Early-stopping patience");
  pos_opt = app.add_option("--pos-weight", pos_weight, "Positive-class weight");
  val_opt = app.add_option("--val-fraction", val_fraction, "Fraction of training neonates used for validation");
  neg_opt = app.add_option("--neg-ratio", neg_ratio, "Negatives per positive sampled each epoch (0 = all)");
  precision_opt = app.add_option("--precision", precision, "float32 or float64")
                      ->check(CLI::IsMember({"float32", "float64"}));
}

void TrainFlags::apply(train::TrainConfig& cfg) const {
  if (given(seed_opt)) cfg.seed = seed;
  if (given(lambda_opt)) cfg.lambda = lambda;
  if (given(lr_opt)) cfg.learning_rate = learning_rate;
  if (given(batch_opt)) cfg.batch_size = batch_size;
  if (given(epochs_opt)) cfg.max_epochs = max_epochs;
  if (given(patience_opt)) cfg.patience = patience;
  if (given(pos_opt)) cfg.pos_weight = pos_weight;
  if (given(val_opt)) cfg.val_fraction = val_fraction;
  if (given(neg_opt)) cfg.negatives_per_positive = neg_ratio;
  if (given(precision_opt)) cfg.precision = precision;
  cfg.validate();
}

}  // namespace statenet::cli
