#include "statenet/models/baselines.hpp"

#include <random>

#include "statenet/diff/gru.hpp"
#include "temporal_stack.hpp"

namespace statenet::models {
namespace {

// Column-major C x L copy, one column per time step, scaled to model units.
template <typename T>
Matrix<T> as_steps(const Signal<T>& x, double scale) {
  return x * static_cast<T>(scale);
}

template <typename T>
std::vector<detail::ConvLayer> tcn_layers(const diff::ParamSet<T>& params, const StateNetConfig& cfg,
                                          Index channels) {
  std::vector<detail::ConvLayer> layers;
  Index in = channels;
  for (int l = 0; l < cfg.tcn_layers; ++l) {
    const std::string base = "temporal." + std::to_string(l);
    layers.push_back({params.index_of(base + ".weight"), params.index_of(base + ".bias"), Index{1} << l,
                      cfg.residual && in == cfg.hidden_dim});
    in = cfg.hidden_dim;
  }
  return layers;
}

}  // namespace

// ---- GRU baseline ---------------------------------------------------------

template <typename T>
diff::ParamSet<T> GruClassifier<T>::layout(Index channels, int hidden) {
  if (channels < 1) throw ShapeError("gru baseline needs at least one channel");
  if (hidden <= 0) throw std::invalid_argument("gru: hidden_dim must be positive");
  diff::ParamSet<T> p;
  p.add("gru.input_weight", 3 * hidden, channels);
  p.add("gru.hidden_weight", 3 * hidden, hidden);
  p.add("gru.bias", 3 * hidden, 1);
  p.add("readout.weight", 1, hidden);
  p.add("readout.bias", 1, 1);
  return p;
}

template <typename T>
GruClassifier<T>::GruClassifier(const ModelSpec& spec, Index channels, std::uint64_t seed)
    : Classifier<T>(spec), channels_(channels), params_(layout(channels, spec.gru_hidden)) {
  std::mt19937_64 rng(seed);
  const Index h = spec.gru_hidden;
  diff::glorot_uniform(params_.value(0), channels, h, rng);
  diff::glorot_uniform(params_.value(1), h, h, rng);
  diff::glorot_uniform(params_.value(3), h, 1, rng);
}

template <typename T>
GruClassifier<T>::GruClassifier(const ModelSpec& spec, Index channels, diff::ParamSet<T> params)
    : Classifier<T>(spec), channels_(channels), params_(std::move(params)) {
  if (!params_.same_layout(layout(channels, spec.gru_hidden))) {
    throw ShapeError("gru baseline: parameter layout does not match the configuration");
  }
}

template <typename T>
T GruClassifier<T>::logit(const Signal<T>& x) const {
  this->check_channels(x.rows());
  const Vector<T> last = diff::gru_forward<T>(as_steps(x, this->spec().input_scale), params_.value(0),
                                              params_.value(1), params_.value(2));
  return (params_.value(3) * last)(0, 0) + params_.value(4)(0, 0);
}

template <typename T>
T GruClassifier<T>::accumulate_gradient(const Signal<T>& x,
                                        const typename Classifier<T>::GradientSeed& dloss_dlogit) {
  this->check_channels(x.rows());
  const Matrix<T> steps = as_steps(x, this->spec().input_scale);
  diff::GruTrace<T> trace;
  const Vector<T> last = diff::gru_forward<T>(steps, params_.value(0), params_.value(1), params_.value(2), &trace);
  const T out = (params_.value(3) * last)(0, 0) + params_.value(4)(0, 0);
  const T d_logit = static_cast<T>(dloss_dlogit(static_cast<double>(out)));

  auto grads = detail::zero_like(params_);
  grads[3].noalias() += d_logit * last.transpose();
  grads[4](0, 0) += d_logit;
  const Vector<T> d_last = params_.value(3).transpose() * d_logit;
  diff::gru_backward<T>(steps, params_.value(0), params_.value(1), trace, d_last, grads[0], grads[1], grads[2]);
  detail::add_trainable(params_, grads);
  return out;
}

// ---- TCN baseline ---------------------------------------------------------

template <typename T>
diff::ParamSet<T> TcnClassifier<T>::layout(Index channels, const StateNetConfig& cfg) {
  if (channels < 1) throw ShapeError("tcn baseline needs at least one channel");
  cfg.validate();
  diff::ParamSet<T> p;
  detail::add_temporal_layers(p, channels, cfg, "temporal");
  p.add("readout.weight", 1, cfg.hidden_dim);
  p.add("readout.bias", 1, 1);
  return p;
}

template <typename T>
TcnClassifier<T>::TcnClassifier(const ModelSpec& spec, Index channels, std::uint64_t seed)
    : Classifier<T>(spec), channels_(channels), params_(layout(channels, spec.net)) {
  std::mt19937_64 rng(seed);
  detail::init_temporal_layers(params_, tcn_layers(params_, spec.net, channels), spec.net.kernel_size, rng);
  auto& readout = params_.at("readout.weight").value;
  diff::glorot_uniform(readout, readout.cols(), 1, rng);
}

template <typename T>
TcnClassifier<T>::TcnClassifier(const ModelSpec& spec, Index channels, diff::ParamSet<T> params)
    : Classifier<T>(spec), channels_(channels), params_(std::move(params)) {
  if (!params_.same_layout(layout(channels, spec.net))) {
    throw ShapeError("tcn baseline: parameter layout does not match the configuration");
  }
}

template <typename T>
T TcnClassifier<T>::logit(const Signal<T>& x) const {
  this->check_channels(x.rows());
  const auto layers = tcn_layers(params_, this->spec().net, channels_);
  const Matrix<T> out = detail::temporal_forward(params_, layers, as_steps(x, this->spec().input_scale),
                                                 x.cols(), nullptr);
  const Vector<T> pooled = out.rowwise().mean();
  const auto& readout = params_.at("readout.weight").value;
  return (readout * pooled)(0, 0) + params_.at("readout.bias").value(0, 0);
}

template <typename T>
T TcnClassifier<T>::accumulate_gradient(const Signal<T>& x,
                                        const typename Classifier<T>::GradientSeed& dloss_dlogit) {
  this->check_channels(x.rows());
  const Index length = x.cols();
  const auto layers = tcn_layers(params_, this->spec().net, channels_);
  detail::TemporalTrace<T> trace;
  const Matrix<T> out =
      detail::temporal_forward(params_, layers, as_steps(x, this->spec().input_scale), length, &trace);
  const Vector<T> pooled = out.rowwise().mean();
  const Index w = params_.index_of("readout.weight");
  const Index b = params_.index_of("readout.bias");
  const T logit_value = (params_.value(w) * pooled)(0, 0) + params_.value(b)(0, 0);
  const T d_logit = static_cast<T>(dloss_dlogit(static_cast<double>(logit_value)));

  auto grads = detail::zero_like(params_);
  grads[static_cast<std::size_t>(w)].noalias() += d_logit * pooled.transpose();
  grads[static_cast<std::size_t>(b)](0, 0) += d_logit;
  const Matrix<T> d_pooled = params_.value(w).transpose() * d_logit;  // d x 1
  Matrix<T> d_out = d_pooled.replicate(1, length) / static_cast<T>(length);
  detail::temporal_backward(params_, layers, length, trace, std::move(d_out), grads);
  detail::add_trainable(params_, grads);
  return logit_value;
}

template class GruClassifier<float>;
template class GruClassifier<double>;
template class TcnClassifier<float>;
template class TcnClassifier<double>;

}  // namespace statenet::models
