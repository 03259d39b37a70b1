#include "statenet/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "statenet/core.hpp"

namespace statenet::eval {
namespace {

struct Counts {
  double pos = 0;
  double neg = 0;
};

Counts check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  Counts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw std::invalid_argument("non-finite score");
    (labels[i] ? c.pos : c.neg) += 1;
  }
  return c;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = check(scores, labels);
  if (c.pos == 0 || c.neg == 0) throw UndefinedMetric("AUROC needs both positive and negative labels");
  const auto idx = order_by_score(scores, false);
  // Twice the rank sum keeps average ranks integral.
  double twice_rank_sum = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double group_pos = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) group_pos += labels[idx[j++]];
    const double first = static_cast<double>(i + 1);
    const double last = static_cast<double>(j);
    twice_rank_sum += group_pos * (first + last);
    i = j;
  }
  const double u = 0.5 * (twice_rank_sum - c.pos * (c.pos + 1));
  return u / (c.pos * c.neg);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = check(scores, labels);
  if (c.pos == 0) throw UndefinedMetric("AUPRC needs at least one positive label");
  const auto idx = order_by_score(scores, true);
  double tp = 0;
  double seen = 0;
  double sum = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double group_pos = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) group_pos += labels[idx[j++]];
    tp += group_pos;
    seen += static_cast<double>(j - i);
    const double precision = tp / seen;
    if (group_pos == 1) {
      sum += precision;
    } else if (group_pos > 1) {
      sum += group_pos * precision;
    }
    i = j;
  }
  return sum / c.pos;
}

}  // namespace statenet::eval
