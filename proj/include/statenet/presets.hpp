#pragma once

#include <string>
#include <vector>

#include "statenet/models/classifier.hpp"
#include "statenet/moe/ensemble.hpp"
#include "statenet/train/trainer.hpp"

namespace statenet {

// Named starting points for model, training and gate settings.
//
//   default  the library defaults (d = 32, five temporal layers)
//   desk     a narrower network and short schedule that runs the 12-neonate
//            benchmark on a single CPU core in minutes
struct Preset {
  std::string name;
  models::ModelSpec model;
  train::TrainConfig train;
  moe::GateConfig gate;
  train::TrainConfig gate_train;
};

Preset preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace statenet
