#pragma once

#include <random>
#include <type_traits>
#include <string>
#include <vector>

#include "statenet/diff/ops.hpp"
#include "statenet/diff/params.hpp"
#include "statenet/models/classifier.hpp"

namespace statenet::models::detail {

struct ConvLayer {
  Index weight;
  Index bias;
  Index dilation;
  bool residual;
};

template <typename T>
std::vector<ConvLayer> add_temporal_layers(diff::ParamSet<T>& params, Index in_channels,
                                           const StateNetConfig& cfg, const std::string& prefix) {
  std::vector<ConvLayer> layers;
  Index in = in_channels;
  for (int l = 0; l < cfg.tcn_layers; ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    ConvLayer layer;
    layer.weight = params.add(base + ".weight", cfg.hidden_dim, in * cfg.kernel_size);
    layer.bias = params.add(base + ".bias", cfg.hidden_dim, 1);
    layer.dilation = Index{1} << l;
    layer.residual = cfg.residual && in == cfg.hidden_dim;
    layers.push_back(layer);
    in = cfg.hidden_dim;
  }
  return layers;
}

template <typename T>
void init_temporal_layers(diff::ParamSet<T>& params, const std::vector<ConvLayer>& layers,
                          Index kernel, std::mt19937_64& rng) {
  for (const auto& layer : layers) {
    auto& w = params.value(layer.weight);
    diff::glorot_uniform(w, w.cols(), w.rows() * kernel, rng);
  }
}

template <typename T>
struct TemporalTrace {
  std::vector<Matrix<T>> outputs;    // outputs[0] is the input
  std::vector<Matrix<T>> rectified;  // ReLU(conv) per layer, kept for residual layers
};

template <typename T>
Matrix<T> temporal_forward(const diff::ParamSet<T>& params, const std::vector<ConvLayer>& layers,
                           Matrix<T> input, Index segment,
                           std::type_identity_t<TemporalTrace<T>>* trace) {
  if (trace) {
    trace->outputs.clear();
    trace->rectified.clear();
  }
  Matrix<T> current = std::move(input);
  for (const auto& layer : layers) {
    Matrix<T> next = diff::relu(diff::causal_conv<T>(current, params.value(layer.weight),
                                                     params.value(layer.bias), layer.dilation, segment));
    if (trace) {
      trace->rectified.push_back(layer.residual ? next : Matrix<T>());
    }
    if (layer.residual) next += current;
    if (trace) trace->outputs.push_back(std::move(current));
    current = std::move(next);
  }
  if (trace) trace->outputs.push_back(current);
  return current;
}

// grads has one slot per parameter index.
template <typename T>
void temporal_backward(const diff::ParamSet<T>& params, const std::vector<ConvLayer>& layers,
                       Index segment, const TemporalTrace<T>& trace, Matrix<T> d_out,
                       std::vector<Matrix<T>>& grads) {
  for (auto l = static_cast<std::ptrdiff_t>(layers.size()) - 1; l >= 0; --l) {
    const auto& layer = layers[static_cast<std::size_t>(l)];
    const auto& out = layer.residual ? trace.rectified[static_cast<std::size_t>(l)]
                                     : trace.outputs[static_cast<std::size_t>(l) + 1];
    Matrix<T> d_pre = (out.array() > T(0)).select(d_out, T(0));
    const bool need_dx = l > 0;
    Matrix<T> d_in;
    diff::causal_conv_backward<T>(trace.outputs[static_cast<std::size_t>(l)], params.value(layer.weight),
                                  d_pre, layer.dilation, segment, need_dx ? &d_in : nullptr,
                                  grads[static_cast<std::size_t>(layer.weight)],
                                  grads[static_cast<std::size_t>(layer.bias)]);
    if (!need_dx) break;
    if (layer.residual) d_in += d_out;
    d_out = std::move(d_in);
  }
}

// Mean over each of the S segments of a d x (S * segment) matrix -> S x d.
template <typename T>
Matrix<T> segment_means(const Matrix<T>& a, Index segment) {
  const Index segments = a.cols() / segment;
  Matrix<T> out(segments, a.rows());
  for (Index s = 0; s < segments; ++s) {
    out.row(s) = a.middleCols(s * segment, segment).rowwise().mean().transpose();
  }
  return out;
}

template <typename T>
Matrix<T> segment_means_backward(const Matrix<T>& d_means, Index segment) {
  const Index segments = d_means.rows();
  Matrix<T> out(d_means.cols(), segments * segment);
  const T scale = T(1) / static_cast<T>(segment);
  for (Index s = 0; s < segments; ++s) {
    out.middleCols(s * segment, segment).colwise() = d_means.row(s).transpose() * scale;
  }
  return out;
}

template <typename T>
std::vector<Matrix<T>> zero_like(const diff::ParamSet<T>& params) {
  std::vector<Matrix<T>> grads;
  grads.reserve(static_cast<std::size_t>(params.size()));
  for (const auto& p : params) grads.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
  return grads;
}

template <typename T>
void add_trainable(diff::ParamSet<T>& params, const std::vector<Matrix<T>>& grads) {
  for (Index i = 0; i < params.size(); ++i) {
    if (params[i].trainable) params.grad(i) += grads[static_cast<std::size_t>(i)];
  }
}

}  // namespace statenet::models::detail
