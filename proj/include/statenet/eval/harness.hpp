#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "statenet/eeg/folds.hpp"
#include "statenet/eeg/recording.hpp"
#include "statenet/eval/report.hpp"
#include "statenet/models/classifier.hpp"
#include "statenet/train/trainer.hpp"

namespace statenet::eval {

// All windows of a cohort on one montage, in recording order.
struct WindowedCohort {
  std::string montage;
  Index channels = 0;
  std::vector<eeg::EegWindow> windows;
  std::vector<std::string> neonates;  // distinct ids, first-appearance order

  // Indices of windows whose neonate is in `ids`.
  std::vector<std::size_t> select(const std::vector<std::string>& ids) const;
};

WindowedCohort window_cohort(const std::vector<eeg::Recording>& recordings,
                             double window_s = eeg::kDefaultWindowSeconds,
                             double min_overlap_s = eeg::kDefaultMinOverlapSeconds);

// Independent stream derived from a run seed, so that fold splits, parameter
// initialisation and minibatch order never share a generator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

enum class SeedStream : std::uint64_t { init = 1, shuffle = 2, validation = 3 };

template <typename T>
struct FoldRun {
  int fold = 0;  // 1-based
  eeg::Fold split;
  std::vector<std::string> validation_ids;
  std::unique_ptr<models::Classifier<T>> model;  // holds the best parameters
  train::FitResult<T> fit;
  std::vector<double> test_scores;
  std::vector<int> test_labels;
  std::vector<std::string> test_neonates;  // per test window
};

template <typename T>
struct CvResult {
  MetricReport report;
  eeg::FoldSplit split;
  std::vector<FoldRun<T>> runs;
};

struct CvOptions {
  int folds = 4;
  // Train only these 1-based folds; empty means all.
  std::vector<int> only_folds;
  // Seed of the fold and validation splits; the training seed when unset.
  // Fixing it lets models trained with different seeds share one split.
  std::optional<std::uint64_t> split_seed;
};

using FoldEpochCallback = std::function<void(int fold, const train::EpochRecord&)>;

// Patient-wise k-fold protocol. Per fold the training neonates are split
// again into fit/validation neonates for early stopping; test neonates are
// never read before scoring. Throws std::logic_error if a split leaks a
// neonate across train and test.
template <typename T>
CvResult<T> cross_validate(const models::ModelSpec& spec, const WindowedCohort& cohort, const CvOptions& options,
                           const train::TrainConfig& cfg, const std::function<void(FoldRun<T>&)>& on_fold = {},
                           const FoldEpochCallback& on_epoch = {});

// Held-out probabilities for the windows at `indices`.
template <typename T>
std::vector<double> predict_windows(const models::Classifier<T>& model, const WindowedCohort& cohort,
                                    const std::vector<std::size_t>& indices);

// Scores fold models on a cohort derived on another montage, using each
// fold's test neonates. No parameter is touched. Throws NotTransferable for
// architectures tied to their training channel count.
template <typename T>
MetricReport transfer_eval(const std::vector<const models::Classifier<T>*>& fold_models,
                           const std::vector<std::vector<std::string>>& fold_test_ids,
                           const WindowedCohort& target);

}  // namespace statenet::eval
