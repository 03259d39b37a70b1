#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace statenet::eeg {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct FoldSplit {
  std::vector<Fold> folds;

  // Throws std::logic_error if any fold mixes a subject into train and test,
  // or if the test sets do not partition `all_ids`.
  void validate(const std::vector<std::string>& all_ids) const;
};

// Patient-wise k-fold split. Ids are shuffled with `seed`, then cut into k
// contiguous test groups whose sizes differ by at most one (larger groups
// first). Throws std::invalid_argument for k <= 0, k > ids.size() or
// duplicate ids.
FoldSplit patient_folds(const std::vector<std::string>& neonate_ids, int k, std::uint64_t seed);

// Moves round(fraction * ids.size()) ids (at least one when ids.size() >= 3
// and fraction > 0) to a validation list. Deterministic in seed.
struct ValidationSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};
ValidationSplit split_validation(const std::vector<std::string>& ids, double fraction,
                                 std::uint64_t seed);

}  // namespace statenet::eeg
