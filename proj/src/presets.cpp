#include "statenet/presets.hpp"

#include <stdexcept>

namespace statenet {

namespace {

train::TrainConfig default_gate_train() {
  train::TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.max_epochs = 10;
  cfg.val_fraction = 0.0;
  return cfg;
}

}  // namespace

Preset preset_by_name(const std::string& name) {
  Preset p;
  p.name = name;
  p.gate_train = default_gate_train();
  if (name == "default") return p;
  if (name == "desk") {
    p.model.net.hidden_dim = 8;
    p.model.net.tcn_layers = 4;
    p.model.net.kernel_size = 3;
    p.model.net.gat_layers = 2;
    p.model.net.mlp_hidden = 16;
    p.train.learning_rate = 3e-3;
    p.train.batch_size = 8;
    p.train.max_epochs = 6;
    p.train.patience = 3;
    p.train.negatives_per_positive = 3.0;
    return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected default or desk)");
}

std::vector<std::string> preset_names() { return {"default", "desk"}; }

}  // namespace statenet
