#pragma once

#include <vector>

#include "statenet/models/classifier.hpp"

namespace statenet::models {

// One fully connected graph-attention layer over channels. Rows of `m` are
// node vectors m_c. With z_c = W m_c:
//
//   alpha(i, j) = exp(<z_i, z_j>) / sum_k exp(<z_i, z_k>)
//   m'_c = sum_k alpha(c, k) z_k
//
// Optionally returns the C x C attention matrix.
template <typename T>
Matrix<T> gat_layer(const Matrix<T>& m, const Matrix<T>& w, Matrix<T>* attention = nullptr);

// Backward of gat_layer given the forward attention; accumulates d_w and
// writes d_m.
template <typename T>
void gat_layer_backward(const Matrix<T>& m, const Matrix<T>& w, const Matrix<T>& attention,
                        const Matrix<T>& d_out, Matrix<T>& d_m, Matrix<T>& d_w);

// Spatial-temporal network.
//
// Every channel runs through the same stack of causal dilated convolutions
// (dilation 2^(l-1), ReLU after each layer) and is mean-pooled over time into
// a d-vector. The C x d node matrix passes through the GAT layers, is averaged
// over channels and read out by a three-affine MLP (d -> h -> h -> 1, ReLU
// between) whose output is the logit.
//
// Parameters never depend on C, so one parameter set scores any montage.
template <typename T>
class StateNet final : public Classifier<T> {
 public:
  StateNet(const ModelSpec& spec, std::uint64_t seed);
  // Adopts trained parameters; throws ShapeError if their layout does not match.
  StateNet(const ModelSpec& spec, diff::ParamSet<T> params);

  Index input_channels() const override { return 0; }

  T logit(const Signal<T>& x) const override;
  T accumulate_gradient(const Signal<T>& x,
                        const typename Classifier<T>::GradientSeed& dloss_dlogit) override;

  // C x d channel representations.
  Matrix<T> temporal_encode(const Signal<T>& x) const;
  T fuse_logit(const Matrix<T>& h) const;
  T spatial_fuse(const Matrix<T>& h) const { return diff::sigmoid(fuse_logit(h)); }

  // Attention matrices of every GAT layer for one window.
  std::vector<Matrix<T>> attention(const Signal<T>& x) const;

  diff::ParamSet<T>& params() override { return params_; }
  const diff::ParamSet<T>& params() const override { return params_; }
  std::unique_ptr<Classifier<T>> clone() const override { return std::make_unique<StateNet>(*this); }

  // Parameter layout for a config, values zero.
  static diff::ParamSet<T> layout(const StateNetConfig& cfg);

 private:
  struct FusionTrace;
  T fuse(const Matrix<T>& h, FusionTrace* trace) const;

  void resolve_indices();

  diff::ParamSet<T> params_;
  std::vector<Index> conv_weight_;
  std::vector<Index> conv_bias_;
  std::vector<Index> gat_weight_;
  std::vector<Index> mlp_weight_;
  std::vector<Index> mlp_bias_;
};

}  // namespace statenet::models
