#include "statenet/eeg/folds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace statenet::eeg {

void FoldSplit::validate(const std::vector<std::string>& all_ids) const {
  std::multiset<std::string> tested;
  for (const auto& fold : folds) {
    const std::set<std::string> test(fold.test.begin(), fold.test.end());
    for (const auto& id : fold.train) {
      if (test.count(id)) throw std::logic_error("neonate " + id + " is in both train and test");
    }
    tested.insert(fold.test.begin(), fold.test.end());
  }
  const std::multiset<std::string> expected(all_ids.begin(), all_ids.end());
  if (tested != expected) throw std::logic_error("test folds do not partition the cohort");
}

FoldSplit patient_folds(const std::vector<std::string>& neonate_ids, int k, std::uint64_t seed) {
  if (k <= 0) throw std::invalid_argument("fold count must be positive");
  const auto n = neonate_ids.size();
  if (static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("fold count exceeds the number of neonates");
  }
  if (std::set<std::string>(neonate_ids.begin(), neonate_ids.end()).size() != n) {
    throw std::invalid_argument("duplicate neonate ids");
  }

  auto order = neonate_ids;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldSplit split;
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    Fold fold;
    fold.test.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    const std::set<std::string> test(fold.test.begin(), fold.test.end());
    for (const auto& id : neonate_ids) {
      if (!test.count(id)) fold.train.push_back(id);
    }
    split.folds.push_back(std::move(fold));
    pos += size;
  }
  return split;
}

ValidationSplit split_validation(const std::vector<std::string>& ids, double fraction,
                                 std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  const auto n = ids.size();
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (fraction > 0.0 && n >= 3 && n_val == 0) n_val = 1;
  if (n_val >= n) n_val = n > 0 ? n - 1 : 0;

  auto order = ids;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const std::set<std::string> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));

  ValidationSplit out;
  for (const auto& id : ids) (val.count(id) ? out.validation : out.train).push_back(id);
  return out;
}

}  // namespace statenet::eeg
