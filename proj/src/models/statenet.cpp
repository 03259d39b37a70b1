#include "statenet/models/statenet.hpp"

#include <random>
#include <stdexcept>

#include "temporal_stack.hpp"

namespace statenet::models {

Index StateNetConfig::receptive_field() const {
  const Index dilation_sum = (Index{1} << tcn_layers) - 1;
  return 1 + static_cast<Index>(kernel_size - 1) * dilation_sum;
}

void StateNetConfig::validate() const {
  if (tcn_layers <= 0 || kernel_size <= 0 || hidden_dim <= 0 || gat_layers < 0 || mlp_hidden <= 0) {
    throw std::invalid_argument("network sizes must be positive");
  }
  if (tcn_layers > 30) throw std::invalid_argument("tcn_layers too large for the dilation schedule");
}

void ModelSpec::validate() const {
  if (arch != "statenet" && arch != "gru" && arch != "tcn") {
    throw std::invalid_argument("unknown architecture '" + arch + "'");
  }
  net.validate();
  if (gru_hidden <= 0) throw std::invalid_argument("gru_hidden must be positive");
  if (!(input_scale > 0.0)) throw std::invalid_argument("input_scale must be positive");
}

template <typename T>
void Classifier<T>::check_channels(Index channels) const {
  if (channels < 1) throw ShapeError(arch() + ": input has no channels");
  const Index expected = input_channels();
  if (expected != 0 && channels != expected) {
    throw ShapeError(arch() + " baseline is tied to C=" + std::to_string(expected) +
                     " channels but got C=" + std::to_string(channels));
  }
}

template <typename T>
Matrix<T> gat_layer(const Matrix<T>& m, const Matrix<T>& w, Matrix<T>* attention) {
  if (m.rows() < 1) throw ShapeError("gat_layer: no nodes");
  if (w.rows() != w.cols() || w.cols() != m.cols()) throw ShapeError("gat_layer: W must be d x d");
  const Matrix<T> z = m * w.transpose();
  Matrix<T> alpha = diff::softmax_rows<T>(z * z.transpose());
  Matrix<T> out = alpha * z;
  if (attention) *attention = std::move(alpha);
  return out;
}

template <typename T>
void gat_layer_backward(const Matrix<T>& m, const Matrix<T>& w, const Matrix<T>& attention,
                        const Matrix<T>& d_out, Matrix<T>& d_m, Matrix<T>& d_w) {
  const Matrix<T> z = m * w.transpose();
  const Matrix<T> d_alpha = d_out * z.transpose();
  Matrix<T> d_z = attention.transpose() * d_out;
  const Matrix<T> d_scores = diff::softmax_rows_backward<T>(attention, d_alpha);
  d_z.noalias() += (d_scores + d_scores.transpose()) * z;
  d_w.noalias() += d_z.transpose() * m;
  d_m.noalias() = d_z * w;
}

template <typename T>
struct StateNet<T>::FusionTrace {
  std::vector<Matrix<T>> node_inputs;
  std::vector<Matrix<T>> attention;
  Vector<T> pooled;
  Vector<T> pre1, act1, pre2, act2;
};

template <typename T>
diff::ParamSet<T> StateNet<T>::layout(const StateNetConfig& cfg) {
  cfg.validate();
  diff::ParamSet<T> p;
  detail::add_temporal_layers(p, 1, cfg, "temporal");
  for (int l = 0; l < cfg.gat_layers; ++l) {
    p.add("gat." + std::to_string(l) + ".weight", cfg.hidden_dim, cfg.hidden_dim);
  }
  p.add("mlp.0.weight", cfg.mlp_hidden, cfg.hidden_dim);
  p.add("mlp.0.bias", cfg.mlp_hidden, 1);
  p.add("mlp.1.weight", cfg.mlp_hidden, cfg.mlp_hidden);
  p.add("mlp.1.bias", cfg.mlp_hidden, 1);
  p.add("mlp.2.weight", 1, cfg.mlp_hidden);
  p.add("mlp.2.bias", 1, 1);
  return p;
}

template <typename T>
StateNet<T>::StateNet(const ModelSpec& spec, std::uint64_t seed)
    : Classifier<T>(spec), params_(layout(spec.net)) {
  resolve_indices();
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < conv_weight_.size(); ++l) {
    auto& w = params_.value(conv_weight_[l]);
    diff::glorot_uniform(w, w.cols(), w.rows() * spec.net.kernel_size, rng);
  }
  for (Index i : gat_weight_) {
    auto& w = params_.value(i);
    diff::glorot_uniform(w, w.cols(), w.rows(), rng);
  }
  for (Index i : mlp_weight_) {
    auto& w = params_.value(i);
    diff::glorot_uniform(w, w.cols(), w.rows(), rng);
  }
}

template <typename T>
StateNet<T>::StateNet(const ModelSpec& spec, diff::ParamSet<T> params)
    : Classifier<T>(spec), params_(std::move(params)) {
  if (!params_.same_layout(layout(spec.net))) {
    throw ShapeError("statenet: parameter layout does not match the configuration");
  }
  resolve_indices();
}

template <typename T>
void StateNet<T>::resolve_indices() {
  const auto& cfg = this->spec().net;
  for (int l = 0; l < cfg.tcn_layers; ++l) {
    conv_weight_.push_back(params_.index_of("temporal." + std::to_string(l) + ".weight"));
    conv_bias_.push_back(params_.index_of("temporal." + std::to_string(l) + ".bias"));
  }
  for (int l = 0; l < cfg.gat_layers; ++l) {
    gat_weight_.push_back(params_.index_of("gat." + std::to_string(l) + ".weight"));
  }
  for (int l = 0; l < 3; ++l) {
    mlp_weight_.push_back(params_.index_of("mlp." + std::to_string(l) + ".weight"));
    mlp_bias_.push_back(params_.index_of("mlp." + std::to_string(l) + ".bias"));
  }
}

namespace {

template <typename T>
std::vector<detail::ConvLayer> conv_layers(const std::vector<Index>& weights, const std::vector<Index>& biases,
                                           const StateNetConfig& cfg, Index in_channels) {
  std::vector<detail::ConvLayer> layers;
  Index in = in_channels;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    layers.push_back({weights[l], biases[l], Index{1} << l, cfg.residual && in == cfg.hidden_dim});
    in = cfg.hidden_dim;
  }
  return layers;
}

}  // namespace

template <typename T>
Matrix<T> StateNet<T>::temporal_encode(const Signal<T>& x) const {
  this->check_channels(x.rows());
  if (x.cols() < 1) throw ShapeError("statenet: empty window");
  const auto layers = conv_layers<T>(conv_weight_, conv_bias_, this->spec().net, 1);
  Matrix<T> input = Eigen::Map<const Matrix<T>>(x.data(), 1, x.size()) *
                    static_cast<T>(this->spec().input_scale);
  const Matrix<T> out = detail::temporal_forward(params_, layers, std::move(input), x.cols(), nullptr);
  return detail::segment_means(out, x.cols());
}

template <typename T>
T StateNet<T>::fuse(const Matrix<T>& h, FusionTrace* trace) const {
  if (h.rows() < 1) throw ShapeError("statenet: spatial fusion over zero channels");
  Matrix<T> nodes = h;
  for (Index w : gat_weight_) {
    Matrix<T> alpha;
    Matrix<T> next = gat_layer<T>(nodes, params_.value(w), &alpha);
    if (trace) {
      trace->node_inputs.push_back(std::move(nodes));
      trace->attention.push_back(std::move(alpha));
    }
    nodes = std::move(next);
  }
  const Vector<T> pooled = nodes.colwise().mean().transpose();
  const Vector<T> pre1 = diff::dense<T>(pooled, params_.value(mlp_weight_[0]), params_.value(mlp_bias_[0]));
  const Vector<T> act1 = diff::relu(pre1);
  const Vector<T> pre2 = diff::dense<T>(act1, params_.value(mlp_weight_[1]), params_.value(mlp_bias_[1]));
  const Vector<T> act2 = diff::relu(pre2);
  const T out = diff::dense<T>(act2, params_.value(mlp_weight_[2]), params_.value(mlp_bias_[2]))(0);
  if (trace) {
    trace->pooled = pooled;
    trace->pre1 = pre1;
    trace->act1 = act1;
    trace->pre2 = pre2;
    trace->act2 = act2;
  }
  return out;
}

template <typename T>
T StateNet<T>::fuse_logit(const Matrix<T>& h) const {
  if (h.cols() != this->spec().net.hidden_dim) throw ShapeError("statenet: H must be C x d");
  return fuse(h, nullptr);
}

template <typename T>
T StateNet<T>::logit(const Signal<T>& x) const {
  return fuse(temporal_encode(x), nullptr);
}

template <typename T>
std::vector<Matrix<T>> StateNet<T>::attention(const Signal<T>& x) const {
  FusionTrace trace;
  fuse(temporal_encode(x), &trace);
  return trace.attention;
}

template <typename T>
T StateNet<T>::accumulate_gradient(const Signal<T>& x,
                                   const typename Classifier<T>::GradientSeed& dloss_dlogit) {
  this->check_channels(x.rows());
  if (x.cols() < 1) throw ShapeError("statenet: empty window");
  const Index length = x.cols();
  const auto layers = conv_layers<T>(conv_weight_, conv_bias_, this->spec().net, 1);

  detail::TemporalTrace<T> temporal;
  Matrix<T> input = Eigen::Map<const Matrix<T>>(x.data(), 1, x.size()) *
                    static_cast<T>(this->spec().input_scale);
  const Matrix<T> encoded = detail::temporal_forward(params_, layers, std::move(input), length, &temporal);
  const Matrix<T> h = detail::segment_means(encoded, length);

  FusionTrace trace;
  const T out = fuse(h, &trace);
  const T d_logit = static_cast<T>(dloss_dlogit(static_cast<double>(out)));

  auto grads = detail::zero_like(params_);
  auto grad = [&](Index i) -> Matrix<T>& { return grads[static_cast<std::size_t>(i)]; };

  // Readout MLP.
  grad(mlp_weight_[2]).noalias() += d_logit * trace.act2.transpose();
  grad(mlp_bias_[2])(0, 0) += d_logit;
  Vector<T> d_pre2 = (params_.value(mlp_weight_[2]).transpose() * d_logit);
  d_pre2 = (trace.pre2.array() > T(0)).select(d_pre2, T(0));
  grad(mlp_weight_[1]).noalias() += d_pre2 * trace.act1.transpose();
  grad(mlp_bias_[1]) += d_pre2;
  Vector<T> d_pre1 = params_.value(mlp_weight_[1]).transpose() * d_pre2;
  d_pre1 = (trace.pre1.array() > T(0)).select(d_pre1, T(0));
  grad(mlp_weight_[0]).noalias() += d_pre1 * trace.pooled.transpose();
  grad(mlp_bias_[0]) += d_pre1;
  const Vector<T> d_pooled = params_.value(mlp_weight_[0]).transpose() * d_pre1;

  // Channel mean, then GAT layers in reverse.
  const Index channels = h.rows();
  Matrix<T> d_nodes = Matrix<T>::Ones(channels, 1) * (d_pooled.transpose() / static_cast<T>(channels));
  for (auto l = static_cast<std::ptrdiff_t>(gat_weight_.size()) - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    Matrix<T> d_prev;
    gat_layer_backward<T>(trace.node_inputs[ul], params_.value(gat_weight_[ul]), trace.attention[ul],
                          d_nodes, d_prev, grad(gat_weight_[ul]));
    d_nodes = std::move(d_prev);
  }

  detail::temporal_backward(params_, layers, length, temporal,
                            detail::segment_means_backward<T>(d_nodes, length), grads);
  detail::add_trainable(params_, grads);
  return out;
}

template class Classifier<float>;
template class Classifier<double>;
template class StateNet<float>;
template class StateNet<double>;
template Matrix<float> gat_layer(const Matrix<float>&, const Matrix<float>&, Matrix<float>*);
template Matrix<double> gat_layer(const Matrix<double>&, const Matrix<double>&, Matrix<double>*);
template void gat_layer_backward(const Matrix<float>&, const Matrix<float>&, const Matrix<float>&,
                                 const Matrix<float>&, Matrix<float>&, Matrix<float>&);
template void gat_layer_backward(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&,
                                 const Matrix<double>&, Matrix<double>&, Matrix<double>&);

}  // namespace statenet::models
