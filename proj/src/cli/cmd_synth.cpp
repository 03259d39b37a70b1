#include <iomanip>
#include <sstream>

#include "commands.hpp"
#include "statenet/eeg/manifest.hpp"
#include "statenet/eval/harness.hpp"

namespace statenet::cli {

void SynthCommand::add(CLI::App& parent) {
  app = parent.add_subcommand("synth", "Write a synthetic cohort (manifest plus signal files)");
  app->add_option("--config", config, "JSON config with keys synth, out");
  app->add_option("--out", out, "Cohort directory");
  app->add_flag("--force", force, "Replace a non-empty output directory");
  neonates_opt = app->add_option("--neonates", neonates, "Number of neonates");
  seed_opt = app->add_option("--seed", seed, "Generator seed");
  montage_opt = app->add_option("--montage", montage, "18 or 3 (bipolar18, bipolar3)");
  minutes_opt = app->add_option("--minutes", minutes, "Minutes per neonate");
  rate_opt = app->add_option("--seizure-rate", seizure_rate, "Seizure events per hour");
}

void SynthCommand::run(Streams io) const {
  const json file = load_config_file(config, {"synth", "out"});
  eeg::SynthConfig cfg = eeg::synth_config_from_json(file.value("synth", json::object()));
  if (given(neonates_opt)) cfg.n_neonates = neonates;
  if (given(seed_opt)) cfg.seed = seed;
  if (given(montage_opt)) cfg.montage = eeg::montage_by_name(montage);
  if (given(minutes_opt)) cfg.minutes_per_neonate = minutes;
  if (given(rate_opt)) cfg.seizure_rate_per_hour = seizure_rate;
  cfg.validate();

  const json resolved = {{"command", "synth"}, {"synth", eeg::synth_config_to_json(cfg)}};
  const auto hash = config_hash(resolved);
  const auto dir = prepare_run_dir(out.empty() ? file.value("out", "") : out, "synth", hash, force);

  const auto recordings = eeg::synth_cohort(cfg);
  eeg::write_cohort(dir, recordings, cfg);
  write_config(dir, resolved, hash);

  const auto windows = eval::window_cohort(recordings);
  std::size_t positives = 0;
  for (const auto& w : windows.windows) positives += static_cast<std::size_t>(w.y);
  double hours = 0.0;
  for (const auto& r : recordings) hours += r.duration_s() / 3600.0;
  const double prevalence =
      windows.windows.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(windows.windows.size());

  const json summary = {{"neonates", cfg.n_neonates},
                        {"montage", cfg.montage.name},
                        {"channels", cfg.montage.channels},
                        {"hours", hours},
                        {"windows", windows.windows.size()},
                        {"positive_windows", positives},
                        {"prevalence", prevalence}};
  write_json(dir / "summary.json", summary);

  std::ostringstream line;
  line << std::fixed << std::setprecision(2) << "neonates " << cfg.n_neonates << "  hours " << hours
       << "  windows " << windows.windows.size() << "  prevalence " << std::setprecision(4) << prevalence;
  io.out << line.str() << '\n';
  io.out << "montage " << cfg.montage.name << ":";
  for (const auto& c : cfg.montage.channels) io.out << ' ' << c;
  io.out << '\n' << "cohort written to " << dir.string() << '\n';
}

}  // namespace statenet::cli
