#include "statenet/diff/loss.hpp"

#include <algorithm>
#include <cmath>

#include "statenet/diff/ops.hpp"

namespace statenet::diff {

double bce(double prob, int label, double pos_weight) {
  const double p = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  return label ? -pos_weight * std::log(p) : -std::log(1.0 - p);
}

double bce_mean(std::span<const double> probs, std::span<const int> labels, double pos_weight) {
  if (probs.empty()) throw std::invalid_argument("loss over zero samples");
  if (probs.size() != labels.size()) throw ShapeError("probabilities and labels differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) total += bce(probs[i], labels[i], pos_weight);
  return total / static_cast<double>(probs.size());
}

double bce_grad_prob(double prob, int label, double pos_weight) {
  if (prob < kProbClamp || prob > 1.0 - kProbClamp) return 0.0;
  return label ? -pos_weight / prob : 1.0 / (1.0 - prob);
}

double bce_grad_logit(double logit, int label, double pos_weight) {
  const double p = sigmoid(logit);
  if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
  return label ? pos_weight * (p - 1.0) : p;
}

}  // namespace statenet::diff
