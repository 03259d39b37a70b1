#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "statenet/core.hpp"
#include "statenet/diff/ops.hpp"
#include "statenet/diff/params.hpp"

namespace statenet::models {

// Channel-shared temporal stack plus graph-attention fusion head. The TCN
// baseline reuses the temporal fields.
struct StateNetConfig {
  int tcn_layers = 5;
  int kernel_size = 3;
  int hidden_dim = 32;  // d
  int gat_layers = 2;
  int mlp_hidden = 16;
  bool residual = false;

  // 1 + (k - 1) * sum_l 2^(l - 1), in samples.
  Index receptive_field() const;
  void validate() const;
};

struct ModelSpec {
  std::string arch = "statenet";  // "statenet", "gru" or "tcn"
  StateNetConfig net;
  int gru_hidden = 16;
  // Constant applied to microvolt inputs before the first layer.
  double input_scale = 0.1;

  void validate() const;
};

// A window-level seizure classifier: C x L signal -> logit, p = sigmoid(logit).
template <typename T>
class Classifier {
 public:
  using GradientSeed = std::function<double(double logit)>;

  explicit Classifier(ModelSpec spec) : spec_(std::move(spec)) {}
  virtual ~Classifier() = default;

  const ModelSpec& spec() const { return spec_; }
  const std::string& arch() const { return spec_.arch; }

  // Channel count the parameters are tied to; 0 when any C >= 1 is accepted.
  virtual Index input_channels() const = 0;
  bool montage_agnostic() const { return input_channels() == 0; }

  virtual T logit(const Signal<T>& x) const = 0;
  T predict(const Signal<T>& x) const { return diff::sigmoid(logit(x)); }

  // One forward/backward pass. `dloss_dlogit` receives the logit and returns
  // dL/dlogit; the resulting parameter gradient is added to the grad slots of
  // trainable tensors. Returns the logit.
  virtual T accumulate_gradient(const Signal<T>& x, const GradientSeed& dloss_dlogit) = 0;

  virtual diff::ParamSet<T>& params() = 0;
  virtual const diff::ParamSet<T>& params() const = 0;

  virtual std::unique_ptr<Classifier> clone() const = 0;

 protected:
  // Throws ShapeError when this model is tied to a different channel count.
  void check_channels(Index channels) const;

 private:
  ModelSpec spec_;
};

}  // namespace statenet::models
