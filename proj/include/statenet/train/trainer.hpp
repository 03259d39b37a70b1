#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "statenet/diff/loss.hpp"
#include "statenet/diff/params.hpp"
#include "statenet/eeg/recording.hpp"
#include "statenet/models/classifier.hpp"

namespace statenet::train {

struct TrainConfig {
  double lambda = 1e-4;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 30;
  int patience = 5;
  std::uint64_t seed = 1;
  double pos_weight = 1.0;
  // Fraction of training neonates held out for early stopping.
  double val_fraction = 0.25;
  // When > 0, each epoch visits every positive window and a fresh random
  // subset of at most this many negatives per positive.
  double negatives_per_positive = 0.0;
  // "float32" or "float64".
  std::string precision = "float32";
  // Evaluate the full training loss before the first update.
  bool eval_initial_loss = false;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
// Rejects unknown keys.
TrainConfig train_config_from_json(const nlohmann::json& j);

// Adam moments, one pair per tensor of the parameter set.
template <typename T>
struct AdamState {
  std::vector<Matrix<T>> m;
  std::vector<Matrix<T>> v;
  long step = 0;

  explicit AdamState(const diff::ParamSet<T>& params);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One Adam update from the grad slots of `params`. Frozen tensors are left
// alone. Throws std::runtime_error naming the tensor on a non-finite gradient.
template <typename T>
void opt_step(diff::ParamSet<T>& params, AdamState<T>& state, double learning_rate);

// Windows converted once to the model's scalar type. At float32 the set
// refers to the source windows, which must outlive it.
template <typename T>
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::span<const eeg::EegWindow> windows);
  // The windows at `indices`, in that order.
  Dataset(std::span<const eeg::EegWindow> windows, std::span<const std::size_t> indices);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const Signal<T>& x(std::size_t i) const;
  int y(std::size_t i) const { return labels_[i]; }
  const std::string& neonate(std::size_t i) const { return *neonates_[i]; }
  std::span<const int> labels() const { return labels_; }
  std::size_t positives() const;

 private:
  void push(const eeg::EegWindow& w);

  std::vector<const Signal<float>*> source_;
  std::vector<Signal<T>> converted_;
  std::vector<int> labels_;
  std::vector<const std::string*> neonates_;
};

template <typename T>
std::vector<double> predict_all(const models::Classifier<T>& model, const Dataset<T>& data);

// Mean BCE over the whole set plus the L2 term at the current parameters.
template <typename T>
diff::LossParts evaluate_loss(const models::Classifier<T>& model, const Dataset<T>& data,
                              const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean of minibatch losses, penalty included
  std::optional<double> val_auroc;
  std::optional<double> val_auprc;
  double param_norm = 0.0;  // ||theta_trainable||
};

struct History {
  std::optional<double> initial_loss;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0 means the initial parameters

  // epoch,train_loss,val_auroc,val_auprc with empty cells for missing values.
  std::string to_csv() const;
};

template <typename T>
struct FitResult {
  diff::ParamSet<T> best;
  diff::ParamSet<T> final;
  History history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch Adam on mean BCE + (lambda / 2)||theta||^2. With a validation
// set, keeps the parameters of the epoch with the highest validation AUPRC
// (AUROC when AUPRC is undefined, training loss when both are) and stops
// after `patience` epochs without improvement. The model is left holding
// the best parameters.
template <typename T>
FitResult<T> fit(models::Classifier<T>& model, const Dataset<T>& train, const Dataset<T>& val,
                 const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace statenet::train
