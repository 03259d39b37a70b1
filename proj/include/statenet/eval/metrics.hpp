#pragma once

#include <span>

namespace statenet::eval {

// Rank formulation: P(score_pos > score_neg) + 0.5 P(tie). Throws
// UndefinedMetric unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision over the descending ranking. Tied scores enter together:
// each positive in a tie group is credited with the precision at the end of
// the group. Throws UndefinedMetric when there are no positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

}  // namespace statenet::eval
