#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "statenet/cli/cli.hpp"
#include "statenet/diff/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = statenet::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("statenet_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

// A small network and a single short epoch keep these runs to seconds.
const std::vector<std::string> kFast{"--preset", "desk", "--hidden-dim", "4", "--tcn-layers", "2",
                                     "--gat-layers", "1", "--mlp-hidden", "4", "--epochs", "1"};

std::vector<std::string> with(std::vector<std::string> args, const std::vector<std::string>& more) {
  args.insert(args.end(), more.begin(), more.end());
  return args;
}

}  // namespace

TEST_CASE("cli synth") {
  const auto dir = scratch("synth");
  const auto a = cli({"synth", "--neonates", "2", "--minutes", "2", "--seed", "7", "--montage", "3", "--out",
                      (dir / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("neonates 2") != std::string::npos);
  CHECK(a.out.find("hours") != std::string::npos);
  CHECK(a.out.find("prevalence") != std::string::npos);
  const auto manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest.at("montage").at("channels") == json({"C3-P3", "C4-P4", "P3-P4"}));
  CHECK(manifest.at("recordings").size() == 2);

  REQUIRE(cli({"synth", "--neonates", "2", "--minutes", "2", "--seed", "7", "--montage", "3", "--out",
               (dir / "b").string()})
              .code == 0);
  for (const auto& rec : manifest.at("recordings")) {
    const auto file = rec.at("signal_file").get<std::string>();
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
  }

  // Refuses to overwrite; --force replaces.
  const auto again = cli({"synth", "--neonates", "2", "--minutes", "2", "--out", (dir / "a").string()});
  CHECK(again.code != 0);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(cli({"synth", "--neonates", "2", "--minutes", "2", "--out", (dir / "a").string(), "--force"}).code == 0);

  const auto quiet = cli({"synth", "--neonates", "2", "--minutes", "2", "--seizure-rate", "0", "--out",
                          (dir / "quiet").string()});
  REQUIRE(quiet.code == 0);
  CHECK(quiet.out.find("prevalence 0.0000\n") != std::string::npos);
  CHECK(read_json(dir / "quiet" / "summary.json").at("prevalence") == 0.0);
}

TEST_CASE("cli config handling") {
  const auto dir = scratch("config");
  std::ofstream(dir / "bad.json") << R"({"synth": {"n_neonates": 2}, "colour": "red"})";
  const auto bad = cli({"synth", "--config", (dir / "bad.json").string(), "--out", (dir / "x").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("colour") != std::string::npos);

  std::ofstream(dir / "good.json") << R"({"synth": {"n_neonates": 3, "minutes_per_neonate": 2}})";
  // Flags win over the file.
  REQUIRE(cli({"synth", "--config", (dir / "good.json").string(), "--neonates", "2", "--out",
               (dir / "c").string()})
              .code == 0);
  CHECK(read_json(dir / "c" / "manifest.json").at("recordings").size() == 2);
  const auto resolved = read_json(dir / "c" / "config.json");
  CHECK(resolved.contains("config_hash"));

  CHECK(cli({"train", "--no-such-flag"}).code != 0);
  CHECK(cli({}).code != 0);
}

TEST_CASE("cli train, eval, transfer, ensemble, occlude") {
  const auto dir = scratch("pipeline");
  REQUIRE(cli({"synth", "--neonates", "4", "--minutes", "3", "--seed", "5", "--seizure-rate", "20", "--out",
               (dir / "c18").string()})
              .code == 0);

  const auto mismatch = cli(with({"train", "--data", (dir / "c18").string(), "--montage", "3", "--out",
                                  (dir / "bad").string()},
                                 kFast));
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("montage mismatch") != std::string::npos);

  const auto run = dir / "run18";
  const auto train = cli(with({"train", "--arch", "statenet", "--montage", "18", "--folds", "4", "--seed", "1",
                               "--data", (dir / "c18").string(), "--out", run.string()},
                              kFast));
  REQUIRE(train.code == 0);
  for (const char* f : {"config.json", "history.csv", "best.ckpt", "final.ckpt", "report.csv", "report.json",
                        "split.json", "log.txt", "fold1/best.ckpt", "fold4/predictions.csv"}) {
    CHECK_MESSAGE(fs::exists(run / f), f);
  }
  CHECK(slurp(run / "fold1" / "history.csv").rfind("epoch,train_loss,val_auroc,val_auprc\n", 0) == 0);

  const auto eval = cli({"eval", "--run", run.string(), "--out", (dir / "eval").string()});
  REQUIRE(eval.code == 0);
  const auto report = slurp(dir / "eval" / "report.csv");
  CHECK(lines(report) == 1 + 4 + 1);
  CHECK(report.find("\naverage,") != std::string::npos);
  CHECK(eval.out.find((dir / "eval" / "report.csv").string()) != std::string::npos);
  // Same checkpoints, same test neonates: the eval report repeats the training one.
  CHECK(report == slurp(run / "report.csv"));

  const auto before = statenet::diff::checkpoint_hash(run / "best.ckpt");
  const auto transfer = cli({"transfer", "--ckpt", (run / "best.ckpt").string(), "--to-montage", "3", "--out",
                             (dir / "transfer").string()});
  REQUIRE(transfer.code == 0);
  CHECK(statenet::diff::checkpoint_hash(run / "best.ckpt") == before);
  CHECK(slurp(dir / "transfer" / "report.csv").find("bipolar3") != std::string::npos);

  const auto tcn_run = dir / "tcn";
  REQUIRE(cli(with({"train", "--arch", "tcn", "--folds", "4", "--fold", "1", "--data", (dir / "c18").string(),
                    "--out", tcn_run.string()},
                   kFast))
              .code == 0);
  const auto refused = cli({"transfer", "--ckpt", (tcn_run / "best.ckpt").string(), "--to-montage", "3", "--out",
                            (dir / "tcn_transfer").string()});
  CHECK(refused.code == 1);
  CHECK(refused.err.find("montage-agnostic") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "tcn_transfer"));

  const auto ens = cli(with({"ensemble", "--members", "gru,tcn,statenet:1,statenet:2", "--data",
                             (dir / "c18").string(), "--folds", "4", "--fold", "2", "--gate-epochs", "1", "--out",
                             (dir / "ens").string()},
                            kFast));
  REQUIRE(ens.code == 0);
  const auto bundle = read_json(dir / "ens" / "bundle" / "ensemble.json");
  CHECK(bundle.at("K") == 4);
  CHECK(bundle.at("members").size() == 4);
  CHECK(lines(slurp(dir / "ens" / "gate_weights.csv")) == 1 + 4);
  CHECK(lines(slurp(dir / "ens" / "report.csv")) == 1 + 4 + 1);

  const auto occ = cli({"occlude", "--ckpt", (run / "best.ckpt").string(), "--out", (dir / "occ").string()});
  REQUIRE(occ.code == 0);
  CHECK(lines(slurp(dir / "occ" / "occlusion.csv")) == 1 + 59);
  CHECK(read_json(dir / "occ" / "occlusion.json").contains("argmax"));
  CHECK(fs::exists(dir / "occ" / "occlusion.ppm"));

  const auto missing = cli({"eval", "--run", (dir / "nowhere").string(), "--out", (dir / "e2").string()});
  CHECK(missing.code == 1);
}

TEST_CASE("cli default output root") {
  const auto dir = scratch("root");
  ::setenv(statenet::cli::kRunsDirEnv, (dir / "runs").c_str(), 1);
  const auto r = cli({"synth", "--neonates", "2", "--minutes", "1"});
  ::unsetenv(statenet::cli::kRunsDirEnv);
  REQUIRE(r.code == 0);
  int found = 0;
  for (const auto& e : fs::directory_iterator(dir / "runs")) {
    CHECK(e.path().filename().string().rfind("synth-", 0) == 0);
    ++found;
  }
  CHECK(found == 1);
}
