#pragma once

#include <random>

#include "statenet/core.hpp"
#include "statenet/diff/params.hpp"
#include "statenet/models/classifier.hpp"

namespace statenet::testing {

inline Matrix<double> random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Signal<double> random_signal(Index channels, Index length, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(channels, length, rng, scale);
}

// Zero-initialised biases put ReLU pre-activations exactly on the kink
// wherever the receptive field sees only zeros; move them off it.
template <typename T>
void jitter_biases(diff::ParamSet<T>& params, std::mt19937_64& rng, double scale = 0.1) {
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& p : params) {
    if (p.name.ends_with("bias")) {
      for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<T>(normal(rng));
    }
  }
}

// Small network used wherever a test needs a full model at float64.
inline models::ModelSpec toy_spec(const std::string& arch) {
  models::ModelSpec spec;
  spec.arch = arch;
  spec.net.tcn_layers = 3;
  spec.net.kernel_size = 3;
  spec.net.hidden_dim = 4;
  spec.net.gat_layers = 2;
  spec.net.mlp_hidden = 5;
  spec.gru_hidden = 4;
  spec.input_scale = 1.0;
  return spec;
}

}  // namespace statenet::testing
