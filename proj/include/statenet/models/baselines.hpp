#pragma once

#include "statenet/models/classifier.hpp"

namespace statenet::models {

// Recurrent baseline: the C channels are the per-step input features of a GRU
// whose final state feeds a single affine readout. Tied to the training C.
template <typename T>
class GruClassifier final : public Classifier<T> {
 public:
  GruClassifier(const ModelSpec& spec, Index channels, std::uint64_t seed);
  GruClassifier(const ModelSpec& spec, Index channels, diff::ParamSet<T> params);

  Index input_channels() const override { return channels_; }
  T logit(const Signal<T>& x) const override;
  T accumulate_gradient(const Signal<T>& x,
                        const typename Classifier<T>::GradientSeed& dloss_dlogit) override;

  diff::ParamSet<T>& params() override { return params_; }
  const diff::ParamSet<T>& params() const override { return params_; }
  std::unique_ptr<Classifier<T>> clone() const override { return std::make_unique<GruClassifier>(*this); }

  static diff::ParamSet<T> layout(Index channels, int hidden);

 private:
  Index channels_;
  diff::ParamSet<T> params_;
};

// Convolutional baseline: the same dilated stack as StateNet, but the first
// layer mixes all C channels jointly. Mean-pooled over time, affine readout.
// Tied to the training C.
template <typename T>
class TcnClassifier final : public Classifier<T> {
 public:
  TcnClassifier(const ModelSpec& spec, Index channels, std::uint64_t seed);
  TcnClassifier(const ModelSpec& spec, Index channels, diff::ParamSet<T> params);

  Index input_channels() const override { return channels_; }
  T logit(const Signal<T>& x) const override;
  T accumulate_gradient(const Signal<T>& x,
                        const typename Classifier<T>::GradientSeed& dloss_dlogit) override;

  diff::ParamSet<T>& params() override { return params_; }
  const diff::ParamSet<T>& params() const override { return params_; }
  std::unique_ptr<Classifier<T>> clone() const override { return std::make_unique<TcnClassifier>(*this); }

  static diff::ParamSet<T> layout(Index channels, const StateNetConfig& cfg);

 private:
  Index channels_;
  diff::ParamSet<T> params_;
};

}  // namespace statenet::models
