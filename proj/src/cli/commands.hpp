#pragma once

#include "common.hpp"

namespace statenet::cli {

struct SynthCommand {
  CLI::App* app = nullptr;
  std::string config, out;
  bool force = false;
  int neonates = 0;
  std::uint64_t seed = 0;
  std::string montage;
  double minutes = 0, seizure_rate = 0;
  CLI::Option *neonates_opt{}, *seed_opt{}, *montage_opt{}, *minutes_opt{}, *rate_opt{};

  void add(CLI::App& parent);
  void run(Streams io) const;
};

struct TrainCommand {
  CLI::App* app = nullptr;
  std::string config, out, data, montage, preset = "default";
  bool force = false;
  int folds = 4;
  std::vector<int> only_folds;
  CLI::Option *folds_opt{}, *only_opt{}, *preset_opt{}, *data_opt{}, *montage_opt{};
  ModelFlags model;
  TrainFlags train;

  void add(CLI::App& parent);
  void run(Streams io) const;
};

struct EvalCommand {
  CLI::App* app = nullptr;
  std::string run_dir, data, out;
  bool force = false;

  void add(CLI::App& parent);
  void run(Streams io) const;
};

struct TransferCommand {
  CLI::App* app = nullptr;
  std::string ckpt, to_montage, to_data, out;
  bool force = false;

  void add(CLI::App& parent);
  void run(Streams io) const;
};

struct EnsembleCommand {
  CLI::App* app = nullptr;
  std::string config, out, data, members = "gru,tcn,statenet:1,statenet:2", preset = "default";
  bool force = false;
  int folds = 4, fold = 1;
  int gate_hidden = 0, gate_epochs = 0;
  double gate_lr = 0;
  CLI::Option *folds_opt{}, *fold_opt{}, *preset_opt{}, *data_opt{}, *members_opt{}, *gate_hidden_opt{},
      *gate_epochs_opt{}, *gate_lr_opt{};
  ModelFlags model;
  TrainFlags train;

  void add(CLI::App& parent);
  void run(Streams io) const;
};

struct OccludeCommand {
  CLI::App* app = nullptr;
  std::string ckpt, data, to_montage, recording, mode = "temporal", out;
  int window = -1;
  Index occluder = 200, stride = 100;
  bool force = false;

  void add(CLI::App& parent);
  void run(Streams io) const;
};

}  // namespace statenet::cli
