#include "statenet/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace statenet::diff {

GradCheckResult grad_check(const std::function<double()>& loss, const std::function<void()>& gradient,
                           ParamSet<double>& params, double eps, Index max_per_tensor,
                           std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  params.zero_grad();
  gradient();
  std::vector<Matrix<double>> analytic;
  for (const auto& p : params) analytic.push_back(p.grad);

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (Index i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    std::vector<Index> coords(static_cast<std::size_t>(p.value.size()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (max_per_tensor > 0 && static_cast<Index>(coords.size()) > max_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(max_per_tensor));
    }
    for (Index c : coords) {
      double& v = p.value.data()[c];
      const double saved = v;
      v = saved + eps;
      const double up = loss();
      v = saved - eps;
      const double down = loss();
      v = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = analytic[static_cast<std::size_t>(i)].data()[c];
      const double rel = std::abs(exact - numeric) / std::max(1e-8, std::abs(exact) + std::abs(numeric));
      ++result.checked;
      if (rel > result.max_rel_error || result.worst_index < 0) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = c;
      }
    }
  }
  // Leave the analytic gradient in place for callers that inspect it.
  for (Index i = 0; i < params.size(); ++i) params[i].grad = analytic[static_cast<std::size_t>(i)];
  return result;
}

}  // namespace statenet::diff
