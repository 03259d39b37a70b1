#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "statenet/cli/cli.hpp"
#include "statenet/presets.hpp"

namespace statenet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// Progress lines go to stderr and to <run>/log.txt.
class Log {
 public:
  Log(const fs::path& file, std::ostream& echo);
  void operator()(const std::string& line);

 private:
  std::ofstream file_;
  std::ostream& echo_;
};

json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
void write_json(const fs::path& path, const json& j);

std::string hex(std::uint64_t v);
// Hash of a resolved configuration (output location excluded).
std::uint64_t config_hash(const json& resolved);

// Run directory: --out when given, else $STATENET_RUNS_DIR/<command>-<hash>
// (./runs when the variable is unset). A non-empty directory is refused
// unless `force`, in which case its contents are replaced.
fs::path prepare_run_dir(const std::string& out_flag, const std::string& command, std::uint64_t hash, bool force);

// Writes config.json with the config hash added.
void write_config(const fs::path& run_dir, json resolved, std::uint64_t hash);

// A cohort directory or its manifest file.
fs::path manifest_path(const std::string& data);

// --config file: a JSON object whose keys must all be in `allowed`.
json load_config_file(const std::string& path, const std::vector<std::string>& allowed);

// Recursive merge; objects merge key by key, anything else is replaced.
json merged(json base, const json& patch);

// Model and training flags shared by train and ensemble. Each flag only
// overrides the resolved value when given on the command line.
struct ModelFlags {
  std::string arch = "statenet";
  int tcn_layers = 0, kernel_size = 0, hidden_dim = 0, gat_layers = 0, mlp_hidden = 0, gru_hidden = 0;
  double input_scale = 0;
  bool residual = false;
  std::vector<CLI::Option*> options;
  CLI::Option* arch_opt = nullptr;

  void add(CLI::App& app, bool with_arch);
  void apply(models::ModelSpec& spec) const;
};

struct TrainFlags {
  double lambda = 0, learning_rate = 0, pos_weight = 0, val_fraction = 0, neg_ratio = 0;
  int batch_size = 0, max_epochs = 0, patience = 0;
  std::uint64_t seed = 1;
  std::string precision;
  CLI::Option *lambda_opt{}, *lr_opt{}, *pos_opt{}, *val_opt{}, *neg_opt{}, *batch_opt{}, *epochs_opt{},
      *patience_opt{}, *seed_opt{}, *precision_opt{};

  void add(CLI::App& app);
  void apply(train::TrainConfig& cfg) const;
};

inline bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

}  // namespace statenet::cli
