#include "statenet/moe/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "statenet/diff/checkpoint.hpp"
#include "statenet/diff/gru.hpp"
#include "statenet/diff/loss.hpp"
#include "statenet/diff/ops.hpp"
#include "statenet/eval/metrics.hpp"
#include "statenet/models/zoo.hpp"

namespace statenet::moe {
using nlohmann::json;

void GateConfig::validate() const {
  if (gru_hidden <= 0) throw std::invalid_argument("gate gru_hidden must be positive");
  if (!(input_scale > 0.0)) throw std::invalid_argument("gate input_scale must be positive");
}

json gate_config_to_json(const GateConfig& cfg) {
  return {{"gru_hidden", cfg.gru_hidden}, {"input_scale", cfg.input_scale}};
}

GateConfig gate_config_from_json(const json& j) {
  GateConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "gru_hidden") cfg.gru_hidden = value.get<int>();
    else if (key == "input_scale") cfg.input_scale = value.get<double>();
    else throw std::invalid_argument("unknown gate config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

namespace {
constexpr Index kInputWeight = 0;
constexpr Index kHiddenWeight = 1;
constexpr Index kGruBias = 2;
constexpr Index kOutWeight = 3;
constexpr Index kOutBias = 4;
}  // namespace

template <typename T>
diff::ParamSet<T> Gate<T>::layout(int hidden, Index experts) {
  diff::ParamSet<T> p;
  p.add("gate.gru.input_weight", 3 * hidden, 1);
  p.add("gate.gru.hidden_weight", 3 * hidden, hidden);
  p.add("gate.gru.bias", 3 * hidden, 1);
  p.add("gate.out.weight", experts, hidden);
  p.add("gate.out.bias", experts, 1);
  return p;
}

template <typename T>
Gate<T>::Gate(const GateConfig& cfg, Index experts, std::uint64_t seed)
    : cfg_(cfg), experts_(experts), params_() {
  cfg.validate();
  if (experts < 1) throw std::invalid_argument("gate needs at least one expert");
  params_ = layout(cfg.gru_hidden, experts);
  std::mt19937_64 rng(seed);
  const Index h = cfg.gru_hidden;
  diff::glorot_uniform(params_.value(kInputWeight), 1, h, rng);
  diff::glorot_uniform(params_.value(kHiddenWeight), h, h, rng);
}

template <typename T>
Gate<T>::Gate(const GateConfig& cfg, Index experts, diff::ParamSet<T> params)
    : cfg_(cfg), experts_(experts), params_(std::move(params)) {
  cfg.validate();
  if (experts < 1) throw std::invalid_argument("gate needs at least one expert");
  if (!params_.same_layout(layout(cfg.gru_hidden, experts))) {
    throw ShapeError("gate: parameter layout does not match the configuration");
  }
}

template <typename T>
Matrix<T> Gate<T>::input(const Signal<T>& x) const {
  if (x.rows() < 1 || x.cols() < 1) throw ShapeError("gate: empty window");
  return (x.colwise().mean() * static_cast<T>(cfg_.input_scale)).eval();
}

template <typename T>
Vector<double> Gate<T>::softmax_of(const Vector<T>& h) const {
  const Vector<double> logits =
      (params_.value(kOutWeight) * h + params_.value(kOutBias)).template cast<double>();
  return diff::softmax<double>(logits);
}

template <typename T>
Vector<double> Gate<T>::weights(const Signal<T>& x) const {
  const Matrix<T> in = input(x);
  return softmax_of(diff::gru_forward<T>(in, params_.value(kInputWeight), params_.value(kHiddenWeight),
                                         params_.value(kGruBias)));
}

template <typename T>
Vector<double> Gate<T>::accumulate_gradient(const Signal<T>& x, const WeightSeed& dloss_dweights) {
  const Matrix<T> in = input(x);
  diff::GruTrace<T> trace;
  const Vector<T> h = diff::gru_forward<T>(in, params_.value(kInputWeight), params_.value(kHiddenWeight),
                                           params_.value(kGruBias), &trace);
  const Vector<double> w = softmax_of(h);
  const Vector<double> dw = dloss_dweights(w);
  if (dw.size() != experts_) throw ShapeError("gate: gradient seed has the wrong length");
  const Vector<T> ds = diff::softmax_backward<double>(w, dw).template cast<T>();

  Matrix<T> d_wx = Matrix<T>::Zero(params_.value(kInputWeight).rows(), params_.value(kInputWeight).cols());
  Matrix<T> d_wh = Matrix<T>::Zero(params_.value(kHiddenWeight).rows(), params_.value(kHiddenWeight).cols());
  Matrix<T> d_b = Matrix<T>::Zero(params_.value(kGruBias).rows(), 1);
  const Vector<T> dh = params_.value(kOutWeight).transpose() * ds;
  diff::gru_backward<T>(in, params_.value(kInputWeight), params_.value(kHiddenWeight), trace, dh, d_wx, d_wh, d_b);

  auto add = [&](Index i, const Matrix<T>& g) {
    if (params_[i].trainable) params_.grad(i) += g;
  };
  add(kInputWeight, d_wx);
  add(kHiddenWeight, d_wh);
  add(kGruBias, d_b);
  add(kOutWeight, ds * h.transpose());
  add(kOutBias, ds);
  return w;
}

double combine(const Vector<double>& weights, const Vector<double>& member_probs) {
  if (weights.size() != member_probs.size()) throw ShapeError("ensemble: weight and member counts differ");
  return weights.dot(member_probs);
}

template <typename T>
EnsembleBundle<T>::EnsembleBundle(std::vector<MemberRef> r, std::vector<std::unique_ptr<models::Classifier<T>>> m,
                                  Gate<T> g)
    : refs(std::move(r)), members(std::move(m)), gate(std::move(g)) {
  if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  if (refs.size() != members.size()) throw std::invalid_argument("ensemble: one reference per member required");
  if (gate.experts() != size()) throw std::invalid_argument("ensemble: gate width differs from the member count");
  for (auto& member : members) member->params().set_trainable(false);
}

template <typename T>
Vector<double> gate_weights(const Signal<T>& x, const EnsembleBundle<T>& bundle) {
  return bundle.gate.weights(x);
}

template <typename T>
Vector<double> member_predictions(const Signal<T>& x, const EnsembleBundle<T>& bundle) {
  Vector<double> p(bundle.size());
  for (Index k = 0; k < bundle.size(); ++k) {
    const auto& ref = bundle.refs[static_cast<std::size_t>(k)];
    try {
      p(k) = static_cast<double>(bundle.members[static_cast<std::size_t>(k)]->predict(x));
    } catch (const ShapeError& e) {
      throw ShapeError("ensemble member " + std::to_string(k) + " (" + ref.tag + "): " + e.what());
    }
  }
  return p;
}

template <typename T>
double ensemble_predict(const Signal<T>& x, const EnsembleBundle<T>& bundle) {
  return combine(gate_weights(x, bundle), member_predictions(x, bundle));
}

namespace {

template <typename T>
Matrix<double> member_table(const EnsembleBundle<T>& bundle, const train::Dataset<T>& data) {
  Matrix<double> out(static_cast<Index>(data.size()), bundle.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.row(static_cast<Index>(i)) = member_predictions(data.x(i), bundle);
  return out;
}

}  // namespace

template <typename T>
train::History train_gate(EnsembleBundle<T>& bundle, const train::Dataset<T>& train_set,
                          const train::Dataset<T>& val_set, const train::TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train_gate: empty training set");
  auto& gate = bundle.gate;
  auto& params = gate.params();
  const Matrix<double> train_probs = member_table(bundle, train_set);
  const Matrix<double> val_probs = member_table(bundle, val_set);

  train::History history;
  train::AdamState<T> adam(params);
  std::mt19937_64 rng(cfg.seed);
  diff::ParamSet<T> best = params;
  double best_score = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double n = static_cast<double>(end - start);
      params.zero_grad();
      double data_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const int y = train_set.y(i);
        const Vector<double> p = train_probs.row(static_cast<Index>(i)).transpose();
        gate.accumulate_gradient(train_set.x(i), [&](const Vector<double>& w) {
          const double mixed = combine(w, p);
          data_loss += diff::bce(mixed, y, cfg.pos_weight);
          return Vector<double>(p * (diff::bce_grad_prob(mixed, y, cfg.pos_weight) / n));
        });
      }
      loss_sum += data_loss / n + 0.5 * cfg.lambda * params.squared_norm(true);
      ++batches;
      diff::add_l2_grad(params, cfg.lambda);
      train::opt_step(params, adam, cfg.learning_rate);
    }

    train::EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.param_norm = std::sqrt(params.squared_norm(true));
    if (!val_set.empty()) {
      std::vector<double> scores(val_set.size());
      for (std::size_t i = 0; i < val_set.size(); ++i) {
        scores[i] = combine(gate.weights(val_set.x(i)), val_probs.row(static_cast<Index>(i)).transpose());
      }
      try {
        record.val_auroc = eval::auroc(scores, val_set.labels());
      } catch (const UndefinedMetric&) {
      }
      try {
        record.val_auprc = eval::auprc(scores, val_set.labels());
      } catch (const UndefinedMetric&) {
      }
    }
    history.epochs.push_back(record);
    if (val_set.empty()) {
      history.best_epoch = epoch;
      continue;
    }
    const double score = record.val_auprc ? *record.val_auprc
                         : record.val_auroc ? *record.val_auroc
                                            : -record.train_loss;
    if (score > best_score) {
      best_score = score;
      best = params;
      history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!val_set.empty()) {
    for (Index i = 0; i < params.size(); ++i) params.value(i) = best[i].value;
  }
  params.zero_grad();
  return history;
}

template <typename T>
void save_bundle(const std::filesystem::path& dir, const EnsembleBundle<T>& bundle) {
  std::filesystem::create_directories(dir);
  const auto gate_path = dir / "gate.ckpt";
  diff::save_checkpoint(gate_path, bundle.gate.params(),
                        {{"gate", gate_config_to_json(bundle.gate.config())}, {"experts", bundle.size()}});
  json members = json::array();
  for (Index k = 0; k < bundle.size(); ++k) {
    const auto& ref = bundle.refs[static_cast<std::size_t>(k)];
    members.push_back({{"tag", ref.tag},
                       {"arch", bundle.members[static_cast<std::size_t>(k)]->arch()},
                       {"checkpoint", ref.checkpoint.string()}});
  }
  const json manifest = {{"format", "statenet-ensemble/1"},
                         {"K", bundle.size()},
                         {"members", members},
                         {"gate", {{"checkpoint", "gate.ckpt"}, {"config", gate_config_to_json(bundle.gate.config())}}}};
  std::ofstream out(dir / "ensemble.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "ensemble.json").string());
}

template <typename T>
EnsembleBundle<T> load_bundle(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open ensemble manifest " + manifest_path.string());
  const json manifest = json::parse(in);
  if (manifest.value("format", "") != "statenet-ensemble/1") {
    throw DataError(manifest_path.string() + ": not an ensemble manifest");
  }
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  std::vector<MemberRef> refs;
  std::vector<std::unique_ptr<models::Classifier<T>>> members;
  for (const auto& m : manifest.at("members")) {
    MemberRef ref{m.at("tag").get<std::string>(), resolve(m.at("checkpoint").get<std::string>())};
    auto loaded = models::load_model<T>(ref.checkpoint);
    if (loaded.model->arch() != m.at("arch").get<std::string>()) {
      throw DataError("ensemble member " + ref.tag + ": checkpoint architecture does not match the manifest");
    }
    members.push_back(std::move(loaded.model));
    refs.push_back(std::move(ref));
  }
  const auto k = manifest.at("K").get<Index>();
  if (k != static_cast<Index>(members.size())) throw DataError("ensemble manifest K disagrees with its members");
  const auto cfg = gate_config_from_json(manifest.at("gate").at("config"));
  auto gate_params = diff::load_checkpoint<T>(resolve(manifest.at("gate").at("checkpoint").get<std::string>()));
  return EnsembleBundle<T>(std::move(refs), std::move(members), Gate<T>(cfg, k, std::move(gate_params)));
}

template class Gate<float>;
template class Gate<double>;
template struct EnsembleBundle<float>;
template struct EnsembleBundle<double>;
template Vector<double> gate_weights(const Signal<float>&, const EnsembleBundle<float>&);
template Vector<double> gate_weights(const Signal<double>&, const EnsembleBundle<double>&);
template Vector<double> member_predictions(const Signal<float>&, const EnsembleBundle<float>&);
template Vector<double> member_predictions(const Signal<double>&, const EnsembleBundle<double>&);
template double ensemble_predict(const Signal<float>&, const EnsembleBundle<float>&);
template double ensemble_predict(const Signal<double>&, const EnsembleBundle<double>&);
template train::History train_gate(EnsembleBundle<float>&, const train::Dataset<float>&,
                                   const train::Dataset<float>&, const train::TrainConfig&);
template train::History train_gate(EnsembleBundle<double>&, const train::Dataset<double>&,
                                   const train::Dataset<double>&, const train::TrainConfig&);
template void save_bundle(const std::filesystem::path&, const EnsembleBundle<float>&);
template void save_bundle(const std::filesystem::path&, const EnsembleBundle<double>&);
template EnsembleBundle<float> load_bundle(const std::filesystem::path&);
template EnsembleBundle<double> load_bundle(const std::filesystem::path&);

}  // namespace statenet::moe
