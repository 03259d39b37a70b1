#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "statenet/eeg/synth.hpp"
#include "statenet/eval/harness.hpp"
#include "statenet/eval/metrics.hpp"
#include "statenet/eval/report.hpp"
#include "statenet/models/zoo.hpp"
#include "statenet/presets.hpp"
#include "statenet/train/trainer.hpp"
#include "test_util.hpp"

using namespace statenet;
using statenet::testing::toy_spec;

namespace {

// P(pos > neg) + half the ties, by counting every pair.
double auroc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

// Sweep every distinct threshold from the top; recall gained at a threshold
// is weighted by the precision of everything at or above it.
double auprc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> thresholds(s.begin(), s.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double positives = static_cast<double>(std::count(y.begin(), y.end(), 1));
  double ap = 0, prev_tp = 0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] == 1 ? tp : fp) += 1;
    }
    ap += (tp - prev_tp) / positives * (tp / (tp + fp));
    prev_tp = tp;
  }
  return ap;
}

std::vector<eeg::EegWindow> toy_windows(int n, Index channels, Index length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<eeg::EegWindow> out;
  for (int i = 0; i < n; ++i) {
    eeg::EegWindow w;
    w.y = i % 3 == 0 ? 1 : 0;
    w.x.resize(channels, length);
    for (Index k = 0; k < w.x.size(); ++k) w.x.data()[k] = normal(rng) * (w.y ? 2.0f : 1.0f);
    w.neonate_id = "N" + std::to_string(i % 4);
    w.recording_id = w.neonate_id;
    out.push_back(std::move(w));
  }
  return out;
}

train::TrainConfig toy_config() {
  train::TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 4;
  cfg.max_epochs = 4;
  cfg.patience = 10;
  cfg.seed = 3;
  cfg.precision = "float64";
  return cfg;
}

bool same_bits(const diff::ParamSet<double>& a, const diff::ParamSet<double>& b) {
  if (!a.same_layout(b)) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (std::memcmp(a.value(i).data(), b.value(i).data(), static_cast<std::size_t>(a.value(i).size()) * 8) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("metric examples") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(eval::auroc(s, y) == 0.75);
  CHECK(std::abs(eval::auprc(s, y) - 5.0 / 6.0) <= 1e-15);
  CHECK(eval::auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(eval::auroc(std::vector<double>(6, 0.3), std::vector<int>{0, 1, 0, 1, 1, 0}) == 0.5);
  CHECK(eval::auprc(std::vector<double>{0.9, 0.5, 0.2}, std::vector<int>{1, 0, 0}) == 1.0);
  CHECK(eval::auprc(std::vector<double>{0.3, 0.1, 0.2}, std::vector<int>{1, 1, 1}) == 1.0);

  CHECK_THROWS_AS(eval::auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetric);
  CHECK_THROWS_AS(eval::auprc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), UndefinedMetric);
  CHECK_THROWS(eval::auroc(std::vector<double>{0.1}, std::vector<int>{0, 1}));
  CHECK_THROWS(eval::auroc(std::vector<double>{0.1, NAN}, std::vector<int>{0, 1}));
}

TEST_CASE("metrics agree with pair-counting and threshold-sweep oracles") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 120;
    const bool ties = trial % 2 == 1;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = ties ? static_cast<double>(rng() % 7) / 7.0 : std::uniform_real_distribution<double>()(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(eval::auroc(s, y) - auroc_oracle(s, y)) <= 1e-12);
    CHECK(std::abs(eval::auprc(s, y) - auprc_oracle(s, y)) <= 1e-9);

    // Strictly monotone transforms leave AUROC alone.
    std::vector<double> t(n);
    std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(3.0 * v) - 7.0; });
    CHECK(eval::auroc(t, y) == eval::auroc(s, y));
  }
}

TEST_CASE("adam") {
  diff::ParamSet<double> p;
  p.add("a", 1, 1);
  p.add("frozen", 2, 1, false);
  p.value(0)(0, 0) = 1.0;
  p.value(1) << 4.0, 5.0;
  train::AdamState<double> state(p);

  train::opt_step(p, state, 0.1);
  CHECK(p.value(0)(0, 0) == 1.0);

  CHECK(p.value(1)(0, 0) == 4.0);

  train::AdamState<double> fresh(p);
  p.grad(0)(0, 0) = 1.0;
  p.grad(1) << 3.0, -3.0;
  train::opt_step(p, fresh, 0.1);
  // Bias-corrected moments are both 1 after one constant step.
  CHECK(p.value(0)(0, 0) == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(p.value(1)(0, 0) == 4.0);
  CHECK(p.value(1)(1, 0) == 5.0);

  p.grad(0)(0, 0) = NAN;
  CHECK_THROWS_WITH(train::opt_step(p, fresh, 0.1), doctest::Contains("non-finite gradient in a"));
}

TEST_CASE("fit is deterministic for a seed") {
  const auto windows = toy_windows(24, 2, 48, 1);
  const train::Dataset<double> tr(std::span<const eeg::EegWindow>(windows).first(16));
  const train::Dataset<double> va(std::span<const eeg::EegWindow>(windows).subspan(16));
  auto run = [&] {
    auto model = models::make_classifier<double>(toy_spec("statenet"), 2, 4);
    return train::fit(*model, tr, va, toy_config());
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    CHECK(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
    CHECK(a.history.epochs[e].val_auroc == b.history.epochs[e].val_auroc);
  }
  CHECK(a.history.best_epoch == b.history.best_epoch);
  CHECK(same_bits(a.best, b.best));
  CHECK(same_bits(a.final, b.final));
  CHECK(a.history.to_csv().rfind("epoch,train_loss,val_auroc,val_auprc\n", 0) == 0);
}

TEST_CASE("a huge L2 weight shrinks the parameters every epoch") {
  const auto windows = toy_windows(16, 2, 48, 2);
  const train::Dataset<double> tr(windows);
  auto cfg = toy_config();
  cfg.lambda = 1e6;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 6;
  auto model = models::make_classifier<double>(toy_spec("statenet"), 2, 5);
  const double start = std::sqrt(model->params().squared_norm());
  const auto result = train::fit(*model, tr, train::Dataset<double>(), cfg);
  const auto& e = result.history.epochs;
  REQUIRE(e.size() == 6);
  CHECK(e.front().param_norm < start);
  for (std::size_t i = 2; i < e.size(); ++i) CHECK(e[i].param_norm < e[i - 1].param_norm);
}

TEST_CASE("reported loss decomposes into cross-entropy and penalty") {
  const auto windows = toy_windows(10, 3, 40, 3);
  const train::Dataset<double> data(windows);
  auto cfg = toy_config();
  cfg.lambda = 0.37;
  auto model = models::make_classifier<double>(toy_spec("statenet"), 3, 6);
  model->params()[0].trainable = false;
  const auto parts = train::evaluate_loss(*model, data, cfg);

  double ce = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double p = model->predict(windows[i].x.cast<double>());
    ce -= windows[i].y ? std::log(p) : std::log(1.0 - p);
  }
  ce /= static_cast<double>(windows.size());
  double sq = 0;
  for (const auto& p : model->params()) {
    if (!p.trainable) continue;
    for (Index k = 0; k < p.value.size(); ++k) sq += p.value.data()[k] * p.value.data()[k];
  }
  CHECK(std::abs(parts.data - ce) <= 1e-9);
  CHECK(std::abs(parts.penalty - 0.5 * cfg.lambda * sq) <= 1e-9);
  CHECK(std::abs(parts.total() - (ce + 0.5 * cfg.lambda * sq)) <= 1e-9);
}

TEST_CASE("fit accepts a single-class set and rejects an empty one") {
  auto windows = toy_windows(8, 1, 32, 4);
  for (auto& w : windows) w.y = 0;
  auto model = models::make_classifier<double>(toy_spec("gru"), 1, 7);
  auto cfg = toy_config();
  cfg.max_epochs = 1;
  CHECK_NOTHROW(train::fit(*model, train::Dataset<double>(windows), train::Dataset<double>(), cfg));
  CHECK_THROWS_AS(train::fit(*model, train::Dataset<double>(), train::Dataset<double>(), cfg), std::invalid_argument);
}

TEST_CASE("train config json rejects unknown keys") {
  auto j = train::train_config_to_json(toy_config());
  CHECK(train::train_config_from_json(j).seed == 3);
  j["momentum"] = 0.9;
  CHECK_THROWS_AS(train::train_config_from_json(j), std::invalid_argument);
}

TEST_CASE("report averages defined folds only") {
  eval::MetricReport r;
  r.folds.push_back(eval::score_fold("1", "bipolar18", {0.1, 0.9, 0.8}, {0, 1, 1}));
  r.folds.push_back(eval::score_fold("2", "bipolar18", {0.2, 0.4, 0.3, 0.6}, {0, 1, 0, 1}));
  r.folds.push_back(eval::score_fold("3", "bipolar18", {0.2, 0.4}, {0, 0}));
  r.finalize();
  CHECK_FALSE(r.folds[2].auroc.has_value());
  REQUIRE(r.mean_auroc.has_value());
  CHECK(std::abs(*r.mean_auroc - (*r.folds[0].auroc + *r.folds[1].auroc) / 2.0) <= 1e-12);
  CHECK(std::abs(*r.mean_auprc - (*r.folds[0].auprc + *r.folds[1].auprc) / 2.0) <= 1e-12);

  const auto csv = r.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.rfind("fold,montage,auroc,auprc\n", 0) == 0);
  CHECK(csv.find("3,bipolar18,undefined,undefined") != std::string::npos);
  CHECK(csv.find("average,") != std::string::npos);
  const auto back = eval::MetricReport::from_json(r.to_json());
  CHECK(back.to_csv() == csv);
}

TEST_CASE("cross validation keeps neonates apart and transfer refuses fixed montages") {
  eeg::SynthConfig synth;
  synth.n_neonates = 4;
  synth.minutes_per_neonate = 2.0;
  synth.seed = 9;
  const auto cohort = eval::window_cohort(eeg::synth_cohort(synth));
  CHECK(cohort.windows.size() == 16);
  CHECK(cohort.channels == 18);

  auto spec = toy_spec("statenet");
  spec.input_scale = 0.1;
  auto cfg = toy_config();
  cfg.max_epochs = 1;
  eval::CvOptions options;
  options.folds = 2;
  const auto cv = eval::cross_validate<double>(spec, cohort, options, cfg);
  CHECK(cv.report.folds.size() == 2);
  std::set<std::string> tested;
  for (const auto& run : cv.runs) {
    for (const auto& id : run.test_neonates) {
      CHECK(std::find(run.split.test.begin(), run.split.test.end(), id) != run.split.test.end());
      tested.insert(id);
    }
    for (const auto& id : run.split.test) {
      CHECK(std::find(run.split.train.begin(), run.split.train.end(), id) == run.split.train.end());
      CHECK(std::find(run.validation_ids.begin(), run.validation_ids.end(), id) == run.validation_ids.end());
    }
  }
  CHECK(tested.size() == 4);

  auto tcn = models::make_classifier<double>(toy_spec("tcn"), 18, 1);
  synth.montage = eeg::bipolar_3();
  const auto small = eval::window_cohort(eeg::synth_cohort(synth));
  CHECK_THROWS_AS(eval::transfer_eval<double>({tcn.get()}, {small.neonates}, small), NotTransferable);
  const auto* net = cv.runs.front().model.get();
  const auto moved = eval::transfer_eval<double>({net}, {cv.runs.front().split.test}, small);
  CHECK(moved.folds.front().montage == "bipolar3");
}

TEST_CASE("epoch one improves on the initial loss") {
  eeg::SynthConfig synth;
  synth.n_neonates = 4;
  synth.minutes_per_neonate = 10.0;
  synth.seed = 7;
  const auto cohort = eval::window_cohort(eeg::synth_cohort(synth));
  const auto preset = preset_by_name("desk");
  auto cfg = preset.train;
  cfg.max_epochs = 1;
  cfg.eval_initial_loss = true;
  auto model = models::make_classifier<float>(preset.model, 18, 1);
  const train::Dataset<float> data(cohort.windows);
  const auto result = train::fit(*model, data, train::Dataset<float>(), cfg);
  REQUIRE(result.history.initial_loss.has_value());
  const auto after = models::make_classifier<float>(preset.model, 18, result.final);
  const double before = train::evaluate_loss(*models::make_classifier<float>(preset.model, 18, 1), data, cfg).total();
  CHECK(before == doctest::Approx(*result.history.initial_loss).epsilon(1e-9));
  CHECK(train::evaluate_loss(*after, data, cfg).total() < before);
}
