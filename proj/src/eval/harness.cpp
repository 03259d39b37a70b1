#include "statenet/eval/harness.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "statenet/models/zoo.hpp"

namespace statenet::eval {

std::vector<std::size_t> WindowedCohort::select(const std::vector<std::string>& ids) const {
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (wanted.count(windows[i].neonate_id)) out.push_back(i);
  }
  return out;
}

WindowedCohort window_cohort(const std::vector<eeg::Recording>& recordings, double window_s,
                             double min_overlap_s) {
  if (recordings.empty()) throw std::invalid_argument("window_cohort: no recordings");
  WindowedCohort out;
  out.montage = recordings.front().montage.name;
  out.channels = recordings.front().channels();
  std::set<std::string> seen;
  for (const auto& rec : recordings) {
    if (rec.channels() != out.channels || rec.montage.name != out.montage) {
      throw DataError("recording " + rec.id + " is on a different montage than the rest of the cohort");
    }
    if (seen.insert(rec.neonate_id).second) out.neonates.push_back(rec.neonate_id);
    for (auto& w : eeg::make_windows(rec, window_s, min_overlap_s)) out.windows.push_back(std::move(w));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::mt19937_64 rng(seq);
  return rng();
}

namespace {

void assert_disjoint(const WindowedCohort& cohort, const std::vector<std::size_t>& used,
                     const std::vector<std::string>& test_ids, int fold) {
  const std::set<std::string> test(test_ids.begin(), test_ids.end());
  for (std::size_t i : used) {
    if (test.count(cohort.windows[i].neonate_id)) {
      throw std::logic_error("fold " + std::to_string(fold) + ": neonate " + cohort.windows[i].neonate_id +
                             " appears in both training and test data");
    }
  }
}

}  // namespace

template <typename T>
std::vector<double> predict_windows(const models::Classifier<T>& model, const WindowedCohort& cohort,
                                    const std::vector<std::size_t>& indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if constexpr (std::is_same_v<T, float>) {
      out.push_back(static_cast<double>(model.predict(cohort.windows[i].x)));
    } else {
      out.push_back(static_cast<double>(model.predict(cohort.windows[i].x.template cast<T>())));
    }
  }
  return out;
}

template <typename T>
CvResult<T> cross_validate(const models::ModelSpec& spec, const WindowedCohort& cohort, const CvOptions& options,
                           const train::TrainConfig& cfg, const std::function<void(FoldRun<T>&)>& on_fold,
                           const FoldEpochCallback& on_epoch) {
  cfg.validate();
  CvResult<T> result;
  const std::uint64_t split_seed = options.split_seed.value_or(cfg.seed);
  result.split = eeg::patient_folds(cohort.neonates, options.folds, split_seed);
  result.split.validate(cohort.neonates);

  for (int k = 1; k <= options.folds; ++k) {
    if (!options.only_folds.empty() &&
        std::find(options.only_folds.begin(), options.only_folds.end(), k) == options.only_folds.end()) {
      continue;
    }
    FoldRun<T> run;
    run.fold = k;
    run.split = result.split.folds[static_cast<std::size_t>(k - 1)];
    const auto inner = eeg::split_validation(run.split.train, cfg.val_fraction,
                                             derive_seed(split_seed, k, static_cast<std::uint64_t>(SeedStream::validation)));
    run.validation_ids = inner.validation;

    const auto fit_idx = cohort.select(inner.train);
    const auto val_idx = cohort.select(inner.validation);
    assert_disjoint(cohort, fit_idx, run.split.test, k);
    assert_disjoint(cohort, val_idx, run.split.test, k);

    const train::Dataset<T> fit_set(cohort.windows, fit_idx);
    const train::Dataset<T> val_set(cohort.windows, val_idx);
    run.model = models::make_classifier<T>(spec, cohort.channels,
                                           derive_seed(cfg.seed, k, static_cast<std::uint64_t>(SeedStream::init)));
    train::TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, k, static_cast<std::uint64_t>(SeedStream::shuffle));
    train::EpochCallback epoch_cb;
    if (on_epoch) epoch_cb = [&](const train::EpochRecord& e) { on_epoch(k, e); };
    run.fit = train::fit(*run.model, fit_set, val_set, fold_cfg, epoch_cb);

    const auto test_idx = cohort.select(run.split.test);
    run.test_scores = predict_windows(*run.model, cohort, test_idx);
    for (std::size_t i : test_idx) {
      run.test_labels.push_back(cohort.windows[i].y);
      run.test_neonates.push_back(cohort.windows[i].neonate_id);
    }
    result.report.folds.push_back(score_fold(std::to_string(k), cohort.montage, run.test_scores, run.test_labels));
    if (on_fold) on_fold(run);
    result.runs.push_back(std::move(run));
  }
  result.report.finalize();
  return result;
}

template <typename T>
MetricReport transfer_eval(const std::vector<const models::Classifier<T>*>& fold_models,
                           const std::vector<std::vector<std::string>>& fold_test_ids,
                           const WindowedCohort& target) {
  if (fold_models.size() != fold_test_ids.size()) {
    throw std::invalid_argument("transfer_eval: one test-id list per fold model is required");
  }
  MetricReport report;
  for (std::size_t k = 0; k < fold_models.size(); ++k) {
    const auto& model = *fold_models[k];
    if (!model.montage_agnostic()) {
      throw NotTransferable(model.arch() + " is tied to C=" + std::to_string(model.input_channels()) +
                            " channels and cannot be transferred to montage " + target.montage +
                            " without retraining");
    }
    const auto idx = target.select(fold_test_ids[k]);
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(target.windows[i].y);
    report.folds.push_back(
        score_fold(std::to_string(k + 1), target.montage, predict_windows(model, target, idx), labels));
  }
  report.finalize();
  return report;
}

template std::vector<double> predict_windows(const models::Classifier<float>&, const WindowedCohort&,
                                             const std::vector<std::size_t>&);
template std::vector<double> predict_windows(const models::Classifier<double>&, const WindowedCohort&,
                                             const std::vector<std::size_t>&);
template CvResult<float> cross_validate(const models::ModelSpec&, const WindowedCohort&, const CvOptions&,
                                        const train::TrainConfig&, const std::function<void(FoldRun<float>&)>&,
                                        const FoldEpochCallback&);
template CvResult<double> cross_validate(const models::ModelSpec&, const WindowedCohort&, const CvOptions&,
                                         const train::TrainConfig&, const std::function<void(FoldRun<double>&)>&,
                                         const FoldEpochCallback&);
template MetricReport transfer_eval(const std::vector<const models::Classifier<float>*>&,
                                    const std::vector<std::vector<std::string>>&, const WindowedCohort&);
template MetricReport transfer_eval(const std::vector<const models::Classifier<double>*>&,
                                    const std::vector<std::vector<std::string>>&, const WindowedCohort&);

}  // namespace statenet::eval
