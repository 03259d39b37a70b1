#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "statenet/diff/params.hpp"

namespace statenet::diff {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  Index checked = 0;
};

// Compares analytic gradients against central differences
// (f(theta + eps) - f(theta - eps)) / (2 eps), coordinate by coordinate.
//
// `gradient` must leave dloss/dtheta in the grad slots of `params`; `loss`
// evaluates at the current values. Frozen tensors are skipped. When
// `max_per_tensor` > 0 at most that many coordinates per tensor are sampled
// (seeded), otherwise all are checked. The relative error of one coordinate
// is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const std::function<double()>& loss, const std::function<void()>& gradient,
                           ParamSet<double>& params, double eps = 1e-6, Index max_per_tensor = 0,
                           std::uint64_t seed = 0);

}  // namespace statenet::diff
