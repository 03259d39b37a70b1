#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "statenet/diff/params.hpp"
#include "statenet/models/classifier.hpp"
#include "statenet/train/trainer.hpp"

namespace statenet::moe {

struct GateConfig {
  int gru_hidden = 16;
  // Applied to the channel-mean series before the GRU.
  double input_scale = 0.1;

  void validate() const;
};

nlohmann::json gate_config_to_json(const GateConfig& cfg);
GateConfig gate_config_from_json(const nlohmann::json& j);

// Sample-level mixture weights: a GRU reads the channel-mean series of the
// window (so the gate accepts any channel count) and one affine map sends its
// final state to K logits, normalised by softmax.
template <typename T>
class Gate {
 public:
  // GRU weights Glorot-uniform, output map zero: the untrained gate is uniform.
  Gate(const GateConfig& cfg, Index experts, std::uint64_t seed);
  Gate(const GateConfig& cfg, Index experts, diff::ParamSet<T> params);

  Index experts() const { return experts_; }
  const GateConfig& config() const { return cfg_; }

  // On the K-simplex; computed in double.
  Vector<double> weights(const Signal<T>& x) const;
  // One forward/backward pass. `dloss_dweights` receives the weights and
  // returns d(loss)/d(weights); the parameter gradient is added to the grad
  // slots of trainable tensors. Returns the weights.
  using WeightSeed = std::function<Vector<double>(const Vector<double>& weights)>;
  Vector<double> accumulate_gradient(const Signal<T>& x, const WeightSeed& dloss_dweights);

  diff::ParamSet<T>& params() { return params_; }
  const diff::ParamSet<T>& params() const { return params_; }

  static diff::ParamSet<T> layout(int hidden, Index experts);

 private:
  Matrix<T> input(const Signal<T>& x) const;
  Vector<double> softmax_of(const Vector<T>& h) const;

  GateConfig cfg_;
  Index experts_;
  diff::ParamSet<T> params_;
};

// p = sum_k w_k p_k.
double combine(const Vector<double>& weights, const Vector<double>& member_probs);

struct MemberRef {
  std::string tag;  // e.g. "gru", "statenet:1"
  std::filesystem::path checkpoint;
};

// K frozen base classifiers plus the gate that mixes them.
template <typename T>
struct EnsembleBundle {
  std::vector<MemberRef> refs;
  std::vector<std::unique_ptr<models::Classifier<T>>> members;
  Gate<T> gate;

  // Marks every member tensor frozen. Throws std::invalid_argument for K = 0
  // or when the gate width differs from K.
  EnsembleBundle(std::vector<MemberRef> refs, std::vector<std::unique_ptr<models::Classifier<T>>> members,
                 Gate<T> gate);

  Index size() const { return static_cast<Index>(members.size()); }
};

template <typename T>
Vector<double> gate_weights(const Signal<T>& x, const EnsembleBundle<T>& bundle);

// Member probabilities. A member that rejects x rethrows its error prefixed
// with the member index and tag.
template <typename T>
Vector<double> member_predictions(const Signal<T>& x, const EnsembleBundle<T>& bundle);

template <typename T>
double ensemble_predict(const Signal<T>& x, const EnsembleBundle<T>& bundle);

// Fits the gate alone on mean BCE of the ensemble output plus the L2 term on
// gate parameters. Member outputs are computed once up front; member
// parameters are never written. Early stopping follows train::fit.
template <typename T>
train::History train_gate(EnsembleBundle<T>& bundle, const train::Dataset<T>& train_set,
                          const train::Dataset<T>& val_set, const train::TrainConfig& cfg);

// <dir>/ensemble.json plus <dir>/gate.ckpt. Member checkpoints are referenced,
// not copied.
template <typename T>
void save_bundle(const std::filesystem::path& dir, const EnsembleBundle<T>& bundle);

template <typename T>
EnsembleBundle<T> load_bundle(const std::filesystem::path& manifest_path);

}  // namespace statenet::moe
