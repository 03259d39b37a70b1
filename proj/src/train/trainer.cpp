#include "statenet/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "statenet/eval/metrics.hpp"

namespace statenet::train {
using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (max_epochs <= 0) throw std::invalid_argument("max_epochs must be positive");
  if (patience <= 0) throw std::invalid_argument("patience must be positive");
  if (!(pos_weight > 0.0)) throw std::invalid_argument("pos_weight must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must be in [0, 1)");
  if (!(negatives_per_positive >= 0.0)) throw std::invalid_argument("negatives_per_positive must be non-negative");
  if (precision != "float32" && precision != "float64") {
    throw std::invalid_argument("precision must be float32 or float64");
  }
}

json train_config_to_json(const TrainConfig& cfg) {
  return {{"lambda", cfg.lambda},
          {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"max_epochs", cfg.max_epochs},
          {"patience", cfg.patience},
          {"seed", cfg.seed},
          {"pos_weight", cfg.pos_weight},
          {"val_fraction", cfg.val_fraction},
          {"negatives_per_positive", cfg.negatives_per_positive},
          {"precision", cfg.precision},
          {"eval_initial_loss", cfg.eval_initial_loss}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "lambda") cfg.lambda = value.get<double>();
    else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
    else if (key == "batch_size") cfg.batch_size = value.get<int>();
    else if (key == "max_epochs") cfg.max_epochs = value.get<int>();
    else if (key == "patience") cfg.patience = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "pos_weight") cfg.pos_weight = value.get<double>();
    else if (key == "val_fraction") cfg.val_fraction = value.get<double>();
    else if (key == "negatives_per_positive") cfg.negatives_per_positive = value.get<double>();
    else if (key == "precision") cfg.precision = value.get<std::string>();
    else if (key == "eval_initial_loss") cfg.eval_initial_loss = value.get<bool>();
    else throw std::invalid_argument("unknown training config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

template <typename T>
AdamState<T>::AdamState(const diff::ParamSet<T>& params) {
  for (const auto& p : params) {
    m.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
    v.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
  }
}

template <typename T>
void opt_step(diff::ParamSet<T>& params, AdamState<T>& state, double learning_rate) {
  if (state.m.size() != static_cast<std::size_t>(params.size())) {
    throw std::invalid_argument("optimizer state does not match the parameter set");
  }
  for (const auto& p : params) {
    if (p.trainable && !p.grad.allFinite()) throw std::runtime_error("non-finite gradient in " + p.name);
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(kAdamBeta1);
  const T b2 = static_cast<T>(kAdamBeta2);
  const T step = static_cast<T>(learning_rate / bc1);
  const T root_bc2 = static_cast<T>(std::sqrt(bc2));
  const T eps = static_cast<T>(kAdamEpsilon);
  for (Index i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto& m = state.m[static_cast<std::size_t>(i)];
    auto& v = state.v[static_cast<std::size_t>(i)];
    m = b1 * m + (T(1) - b1) * p.grad;
    v = b2 * v + (T(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= step * m.array() / (v.array().sqrt() / root_bc2 + eps);
  }
}

template <typename T>
Dataset<T>::Dataset(std::span<const eeg::EegWindow> windows) {
  for (const auto& w : windows) push(w);
}

template <typename T>
Dataset<T>::Dataset(std::span<const eeg::EegWindow> windows, std::span<const std::size_t> indices) {
  for (std::size_t i : indices) push(windows[i]);
}

template <typename T>
void Dataset<T>::push(const eeg::EegWindow& w) {
  if constexpr (std::is_same_v<T, float>) {
    source_.push_back(&w.x);
  } else {
    converted_.push_back(w.x.template cast<T>());
  }
  labels_.push_back(w.y);
  neonates_.push_back(&w.neonate_id);
}

template <typename T>
const Signal<T>& Dataset<T>::x(std::size_t i) const {
  if constexpr (std::is_same_v<T, float>) {
    return *source_[i];
  } else {
    return converted_[i];
  }
}

template <typename T>
std::size_t Dataset<T>::positives() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

template <typename T>
std::vector<double> predict_all(const models::Classifier<T>& model, const Dataset<T>& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<double>(model.predict(data.x(i)));
  return out;
}

template <typename T>
diff::LossParts evaluate_loss(const models::Classifier<T>& model, const Dataset<T>& data,
                              const TrainConfig& cfg) {
  const auto probs = predict_all(model, data);
  return diff::bce_l2_loss(std::span<const double>(probs), data.labels(), model.params(), cfg.lambda,
                           cfg.pos_weight);
}

std::string History::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_auroc,val_auprc\n";
  if (initial_loss) out << "0," << *initial_loss << ",,\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.train_loss << ',';
    if (e.val_auroc) out << *e.val_auroc;
    out << ',';
    if (e.val_auprc) out << *e.val_auprc;
    out << '\n';
  }
  return out.str();
}

namespace {

template <typename T>
diff::ParamSet<T> snapshot(const diff::ParamSet<T>& params) {
  diff::ParamSet<T> out = params;
  out.zero_grad();
  return out;
}

template <typename T>
void restore(diff::ParamSet<T>& dst, const diff::ParamSet<T>& src) {
  for (Index i = 0; i < dst.size(); ++i) dst.value(i) = src[i].value;
}

std::optional<double> try_metric(double (*metric)(std::span<const double>, std::span<const int>),
                                 const std::vector<double>& scores, std::span<const int> labels) {
  try {
    return metric(scores, labels);
  } catch (const UndefinedMetric&) {
    return std::nullopt;
  }
}

// Larger is better.
double selection_score(const EpochRecord& e) {
  if (e.val_auprc) return *e.val_auprc;
  if (e.val_auroc) return *e.val_auroc;
  return -e.train_loss;
}

std::vector<std::size_t> epoch_order(std::span<const int> labels, double neg_ratio, std::mt19937_64& rng) {
  std::vector<std::size_t> order;
  if (neg_ratio <= 0.0) {
    order.resize(labels.size());
    std::iota(order.begin(), order.end(), 0);
  } else {
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? order : negatives).push_back(i);
    std::shuffle(negatives.begin(), negatives.end(), rng);
    const auto keep = std::min(negatives.size(),
                               static_cast<std::size_t>(std::ceil(neg_ratio * static_cast<double>(order.size()))));
    order.insert(order.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

template <typename T>
FitResult<T> fit(models::Classifier<T>& model, const Dataset<T>& train, const Dataset<T>& val,
                 const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("fit: empty training set");
  const std::size_t pos = train.positives();
  if (pos == 0 || pos == train.size()) warn("training set contains a single class");

  auto& params = model.params();
  FitResult<T> result;
  if (cfg.eval_initial_loss) result.history.initial_loss = evaluate_loss(model, train, cfg).total();

  AdamState<T> adam(params);
  std::mt19937_64 rng(cfg.seed);
  diff::ParamSet<T> best = snapshot(params);
  double best_score = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = epoch_order(train.labels(), cfg.negatives_per_positive, rng);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double n = static_cast<double>(end - start);
      params.zero_grad();
      double data_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const int y = train.y(i);
        const double z = static_cast<double>(model.accumulate_gradient(train.x(i), [&](double logit) {
          return diff::bce_grad_logit(logit, y, cfg.pos_weight) / n;
        }));
        data_loss += diff::bce(diff::sigmoid(z), y, cfg.pos_weight);
      }
      loss_sum += data_loss / n + 0.5 * cfg.lambda * params.squared_norm(true);
      ++batches;
      diff::add_l2_grad(params, cfg.lambda);
      opt_step(params, adam, cfg.learning_rate);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.param_norm = std::sqrt(params.squared_norm(true));
    if (!val.empty()) {
      const auto scores = predict_all(model, val);
      record.val_auroc = try_metric(&eval::auroc, scores, val.labels());
      record.val_auprc = try_metric(&eval::auprc, scores, val.labels());
    }
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (val.empty()) {
      result.history.best_epoch = epoch;
      continue;
    }
    const double score = selection_score(record);
    if (score > best_score) {
      best_score = score;
      best = snapshot(params);
      result.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  result.final = snapshot(params);
  if (val.empty()) {
    result.best = result.final;
  } else {
    result.best = std::move(best);
    restore(params, result.best);
  }
  params.zero_grad();
  return result;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void opt_step(diff::ParamSet<float>&, AdamState<float>&, double);
template void opt_step(diff::ParamSet<double>&, AdamState<double>&, double);
template class Dataset<float>;
template class Dataset<double>;
template std::vector<double> predict_all(const models::Classifier<float>&, const Dataset<float>&);
template std::vector<double> predict_all(const models::Classifier<double>&, const Dataset<double>&);
template diff::LossParts evaluate_loss(const models::Classifier<float>&, const Dataset<float>&, const TrainConfig&);
template diff::LossParts evaluate_loss(const models::Classifier<double>&, const Dataset<double>&,
                                       const TrainConfig&);
template FitResult<float> fit(models::Classifier<float>&, const Dataset<float>&, const Dataset<float>&,
                              const TrainConfig&, const EpochCallback&);
template FitResult<double> fit(models::Classifier<double>&, const Dataset<double>&, const Dataset<double>&,
                               const TrainConfig&, const EpochCallback&);

}  // namespace statenet::train
