#include "statenet/cli/cli.hpp"

#include <iostream>

#include "commands.hpp"

namespace statenet::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neonatal EEG seizure detection: synthesis, training, evaluation, transfer, ensembling, occlusion"};
  app.name("statenet");
  app.require_subcommand(1);
  app.set_version_flag("--version", "statenet 0.1.0");

  SynthCommand synth;
  TrainCommand train;
  EvalCommand eval;
  TransferCommand transfer;
  EnsembleCommand ensemble;
  OccludeCommand occlude;
  synth.add(app);
  train.add(app);
  eval.add(app);
  transfer.add(app);
  ensemble.add(app);
  occlude.add(app);

  std::vector<const char*> argv{"statenet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const Streams io{out, err};
  try {
    if (synth.app->parsed()) synth.run(io);
    else if (train.app->parsed()) train.run(io);
    else if (eval.app->parsed()) eval.run(io);
    else if (transfer.app->parsed()) transfer.run(io);
    else if (ensemble.app->parsed()) ensemble.run(io);
    else if (occlude.app->parsed()) occlude.run(io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace statenet::cli
