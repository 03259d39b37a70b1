#pragma once

#include <span>

#include "statenet/diff/params.hpp"

namespace statenet::diff {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before the log.
inline constexpr double kProbClamp = 1e-12;

struct LossParts {
  double data = 0.0;     // mean (class-weighted) binary cross-entropy
  double penalty = 0.0;  // (lambda / 2) * ||theta_trainable||^2
  double total() const { return data + penalty; }
};

// Per-sample cross-entropy; positives are weighted by pos_weight.
double bce(double prob, int label, double pos_weight = 1.0);

// Mean cross-entropy. Throws std::invalid_argument for N = 0 or mismatched
// sizes.
double bce_mean(std::span<const double> probs, std::span<const int> labels, double pos_weight = 1.0);

// Derivative of bce() with respect to the probability; zero where the clamp
// is active.
double bce_grad_prob(double prob, int label, double pos_weight = 1.0);

// Derivative of bce(sigmoid(logit)) with respect to the logit.
double bce_grad_logit(double logit, int label, double pos_weight = 1.0);

template <typename T>
LossParts bce_l2_loss(std::span<const double> probs, std::span<const int> labels,
                      const ParamSet<T>& theta, double lambda, double pos_weight = 1.0) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  return {bce_mean(probs, labels, pos_weight), 0.5 * lambda * theta.squared_norm(true)};
}

// grad += lambda * theta for trainable tensors.
template <typename T>
void add_l2_grad(ParamSet<T>& theta, double lambda) {
  if (lambda == 0.0) return;
  for (auto& p : theta) {
    if (p.trainable) p.grad += static_cast<T>(lambda) * p.value;
  }
}

}  // namespace statenet::diff
