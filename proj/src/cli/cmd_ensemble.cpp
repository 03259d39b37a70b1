#include <map>
#include <sstream>

#include "commands.hpp"
#include "model_io.hpp"
#include "statenet/eval/metrics.hpp"

namespace statenet::cli {
namespace {

struct MemberToken {
  std::string tag;
  std::string arch;  // empty for checkpoint members
  std::optional<std::uint64_t> seed;
  fs::path checkpoint;
};

std::vector<MemberToken> parse_members(const std::string& list) {
  std::vector<MemberToken> out;
  std::stringstream in(list);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    MemberToken m;
    m.tag = token;
    if (token.size() > 5 && token.ends_with(".ckpt")) {
      m.checkpoint = fs::absolute(token).lexically_normal();
    } else {
      const auto colon = token.find(':');
      m.arch = token.substr(0, colon);
      if (m.arch != "statenet" && m.arch != "gru" && m.arch != "tcn") {
        throw std::invalid_argument("unknown ensemble member '" + token + "'");
      }
      if (colon != std::string::npos) m.seed = std::stoull(token.substr(colon + 1));
    }
    out.push_back(std::move(m));
  }
  if (out.empty()) throw std::invalid_argument("ensemble needs at least one member");
  return out;
}

std::string file_tag(std::string tag) {
  for (char& c : tag) {
    if (c == ':' || c == '/' || c == '\\') c = '-';
  }
  return tag;
}

template <typename T>
void run_ensemble(const json& resolved, const fs::path& dir, const eeg::Cohort& cohort, const models::ModelSpec& spec,
                  const train::TrainConfig& cfg, const moe::GateConfig& gate_cfg, const train::TrainConfig& gate_train,
                  const std::vector<MemberToken>& tokens, int folds, int fold, std::uint64_t hash, Streams io) {
  Log log(dir / "log.txt", io.err);
  const auto windows = eval::window_cohort(cohort.recordings);
  const auto split = eeg::patient_folds(windows.neonates, folds, cfg.seed);
  const auto& part = split.folds.at(static_cast<std::size_t>(fold - 1));
  const auto inner = eeg::split_validation(
      part.train, cfg.val_fraction,
      eval::derive_seed(cfg.seed, static_cast<std::uint64_t>(fold),
                        static_cast<std::uint64_t>(eval::SeedStream::validation)));
  if (inner.validation.empty()) throw std::runtime_error("ensemble needs validation neonates to train the gate");

  eval::CvOptions options;
  options.folds = folds;
  options.only_folds = {fold};
  options.split_seed = cfg.seed;

  fs::create_directories(dir / "members");
  std::vector<moe::MemberRef> refs;
  std::vector<std::unique_ptr<models::Classifier<T>>> members;
  for (const auto& token : tokens) {
    if (!token.checkpoint.empty()) {
      auto loaded = models::load_model<T>(token.checkpoint);
      refs.push_back({token.tag, token.checkpoint});
      members.push_back(std::move(loaded.model));
      log("member " + token.tag + ": loaded " + token.checkpoint.string());
      continue;
    }
    auto member_spec = spec;
    member_spec.arch = token.arch;
    auto member_cfg = cfg;
    if (token.seed) member_cfg.seed = *token.seed;
    auto result = eval::cross_validate<T>(member_spec, windows, options, member_cfg, {},
                                          [&](int, const train::EpochRecord& e) {
                                            log("member " + token.tag + " epoch " + std::to_string(e.epoch) +
                                                " loss " + std::to_string(e.train_loss));
                                          });
    auto& run = result.runs.front();
    const auto path = fs::absolute(dir / "members" / (file_tag(token.tag) + ".ckpt"));
    const json meta = {{"montage", windows.montage},
                       {"cohort", resolved.at("data")},
                       {"fold", fold},
                       {"split", {{"train", inner.train}, {"validation", inner.validation}, {"test", part.test}}},
                       {"train", train::train_config_to_json(member_cfg)}};
    models::save_model(path, *run.model, windows.channels, meta);
    refs.push_back({token.tag, path});
    members.push_back(std::move(run.model));
    log("member " + token.tag + " trained");
  }

  std::vector<std::uint64_t> before;
  for (const auto& r : refs) before.push_back(diff::checkpoint_hash(r.checkpoint));

  moe::EnsembleBundle<T> bundle(
      refs, std::move(members),
      moe::Gate<T>(gate_cfg, static_cast<Index>(refs.size()),
                   eval::derive_seed(cfg.seed, static_cast<std::uint64_t>(fold), 4)));
  const auto gate_idx = windows.select(inner.validation);
  const train::Dataset<T> gate_set(windows.windows, gate_idx);
  const auto history = moe::train_gate(bundle, gate_set, train::Dataset<T>(), gate_train);
  for (const auto& e : history.epochs) log("gate epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss));
  write_text(dir / "gate_history.csv", history.to_csv());

  json hashes = json::array();
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto after = diff::checkpoint_hash(refs[k].checkpoint);
    if (after != before[k]) throw std::runtime_error("member checkpoint " + refs[k].checkpoint.string() + " changed");
    hashes.push_back({{"tag", refs[k].tag}, {"checkpoint", refs[k].checkpoint.string()}, {"hash", hex(after)}});
  }
  moe::save_bundle(dir / "bundle", bundle);

  // Held-out scores for each member and the mixture.
  const auto test_idx = windows.select(part.test);
  const auto k_members = static_cast<std::size_t>(bundle.size());
  std::vector<std::vector<double>> member_scores(k_members);
  std::vector<double> mixed;
  std::vector<int> labels;
  for (std::size_t i : test_idx) {
    const auto x = windows.windows[i].x.template cast<T>().eval();
    const auto w = moe::gate_weights(x, bundle);
    const auto p = moe::member_predictions(x, bundle);
    for (std::size_t k = 0; k < k_members; ++k) member_scores[k].push_back(p(static_cast<Index>(k)));
    mixed.push_back(moe::combine(w, p));
    labels.push_back(windows.windows[i].y);
  }
  std::ostringstream report;
  report.precision(17);
  report << "model,auroc,auprc\n";
  json rows = json::array();
  auto add_row = [&](const std::string& name, const std::vector<double>& scores) {
    const auto f = eval::score_fold(std::to_string(fold), windows.montage, scores, labels);
    report << name << ',' << (f.auroc ? std::to_string(*f.auroc) : "undefined") << ','
           << (f.auprc ? std::to_string(*f.auprc) : "undefined") << '\n';
    rows.push_back({{"model", name},
                    {"auroc", f.auroc ? json(*f.auroc) : json(nullptr)},
                    {"auprc", f.auprc ? json(*f.auprc) : json(nullptr)}});
  };
  for (std::size_t k = 0; k < k_members; ++k) add_row(refs[k].tag, member_scores[k]);
  add_row("ensemble", mixed);
  write_text(dir / "report.csv", report.str());
  write_json(dir / "report.json", {{"fold", fold},
                                   {"montage", windows.montage},
                                   {"rows", rows},
                                   {"members", hashes},
                                   {"config_hash", hex(hash)}});

  // Mean gate weights per neonate.
  std::map<std::string, std::pair<Vector<double>, int>> sums;
  for (const auto& w : windows.windows) {
    auto& [sum, n] = sums.try_emplace(w.neonate_id, Vector<double>::Zero(bundle.size()), 0).first->second;
    sum += moe::gate_weights(w.x.template cast<T>().eval(), bundle);
    ++n;
  }
  auto role = [&](const std::string& id) {
    auto in = [&](const std::vector<std::string>& v) { return std::find(v.begin(), v.end(), id) != v.end(); };
    return in(part.test) ? "test" : in(inner.validation) ? "validation" : "train";
  };
  std::ostringstream weights;
  weights.precision(17);
  weights << "neonate_id,split,windows";
  for (const auto& r : refs) weights << ',' << r.tag;
  weights << '\n';
  for (const auto& id : windows.neonates) {
    const auto& [sum, n] = sums.at(id);
    weights << id << ',' << role(id) << ',' << n;
    for (Index k = 0; k < bundle.size(); ++k) weights << ',' << sum(k) / n;
    weights << '\n';
  }
  write_text(dir / "gate_weights.csv", weights.str());

  io.out << report.str();
  io.out << "bundle manifest " << (dir / "bundle" / "ensemble.json").string() << " (K=" << bundle.size() << ")\n";
  io.out << "per-neonate gate weights " << (dir / "gate_weights.csv").string() << '\n';
}

}  // namespace

void EnsembleCommand::add(CLI::App& parent) {
  app = parent.add_subcommand("ensemble", "Train frozen members on one fold and fit the mixture gate");
  app->add_option("--config", config,
                  "JSON config with keys data, folds, fold, members, preset, model, train, gate, gate_train, out");
  app->add_option("--out", out, "Run directory");
  app->add_flag("--force", force, "Replace a non-empty run directory");
  data_opt = app->add_option("--data", data, "Cohort directory or manifest");
  members_opt = app->add_option("--members", members, "Comma list of arch[:seed] or checkpoint paths");
  folds_opt = app->add_option("--folds", folds, "Number of patient-wise folds")->check(CLI::PositiveNumber);
  fold_opt = app->add_option("--fold", fold, "Fold whose training neonates fit the members (1-based)");
  preset_opt = app->add_option("--preset", preset, "Starting configuration: default or desk")
                   ->check(CLI::IsMember(preset_names()));
  gate_hidden_opt = app->add_option("--gate-hidden", gate_hidden, "Gate GRU hidden size");
  gate_epochs_opt = app->add_option("--gate-epochs", gate_epochs, "Gate training epochs");
  gate_lr_opt = app->add_option("--gate-lr", gate_lr, "Gate learning rate");
  model.add(*app, false);
  train.add(*app);
}

void EnsembleCommand::run(Streams io) const {
  const json file = load_config_file(
      config, {"data", "folds", "fold", "members", "preset", "model", "train", "gate", "gate_train", "out"});
  const auto preset_name = given(preset_opt) ? preset : file.value("preset", preset);
  const Preset base = preset_by_name(preset_name);
  auto spec = models::model_spec_from_json(
      merged(models::model_spec_to_json(base.model), file.value("model", json::object())));
  model.apply(spec);
  auto cfg = train::train_config_from_json(
      merged(train::train_config_to_json(base.train), file.value("train", json::object())));
  train.apply(cfg);
  auto gate_cfg =
      moe::gate_config_from_json(merged(moe::gate_config_to_json(base.gate), file.value("gate", json::object())));
  if (given(gate_hidden_opt)) gate_cfg.gru_hidden = gate_hidden;
  gate_cfg.validate();
  auto gate_train = train::train_config_from_json(
      merged(train::train_config_to_json(base.gate_train), file.value("gate_train", json::object())));
  if (given(gate_epochs_opt)) gate_train.max_epochs = gate_epochs;
  if (given(gate_lr_opt)) gate_train.learning_rate = gate_lr;
  gate_train.seed = cfg.seed;
  gate_train.precision = cfg.precision;
  gate_train.validate();

  const int n_folds = given(folds_opt) ? folds : file.value("folds", 4);
  const int which = given(fold_opt) ? fold : file.value("fold", 1);
  if (which < 1 || which > n_folds) throw std::invalid_argument("--fold out of range");
  const auto tokens = parse_members(given(members_opt) ? members : file.value("members", members));
  const auto manifest = manifest_path(given(data_opt) ? data : file.value("data", ""));
  const auto cohort = eeg::load_cohort(manifest);

  json member_list = json::array();
  for (const auto& t : tokens) member_list.push_back(t.checkpoint.empty() ? t.tag : t.checkpoint.string());
  const json resolved = {{"command", "ensemble"},
                         {"data", manifest.string()},
                         {"folds", n_folds},
                         {"fold", which},
                         {"members", member_list},
                         {"preset", preset_name},
                         {"model", models::model_spec_to_json(spec)},
                         {"train", train::train_config_to_json(cfg)},
                         {"gate", moe::gate_config_to_json(gate_cfg)},
                         {"gate_train", train::train_config_to_json(gate_train)}};
  const auto hash = config_hash(resolved);
  const auto dir = prepare_run_dir(given(app->get_option("--out")) ? out : file.value("out", ""), "ensemble", hash, force);
  write_config(dir, resolved, hash);
  with_precision(cfg.precision, [&](auto tag) {
    using T = decltype(tag);
    run_ensemble<T>(resolved, dir, cohort, spec, cfg, gate_cfg, gate_train, tokens, n_folds, which, hash, io);
  });
}

}  // namespace statenet::cli
