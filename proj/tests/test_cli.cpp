#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "demvc/mvds.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "demvc_cli_test";

struct Result {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  const fs::path log = kWork / "cli_output.txt";
  const std::string cmd =
      "cd '" + kWork.string() + "' && '" + DEMVC_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(log);
  return r;
}

const std::string kTrainFlags =
    " --clusters 3 --hidden 8 --embed-dim 3 --iters 12 --batches-per-turn 4"
    " --pretrain-epochs 3 --batch-size 8 --kmeans-restarts 2";

// Builds the shared fixture dataset once per process.
void ensure_dataset() {
  static bool ready = false;
  if (ready) return;
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const Result r = run("synth gaussian --classes 3 --per-class 10 --views 2 --dims 6,5 -o g.mvds --seed 2");
  REQUIRE(r.code == 0);
  ready = true;
}

bool has_keys(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!j.contains(k)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("synth summary") {
  ensure_dataset();
  const Result r = run("synth gaussian --classes 2 --per-class 4 --views 3 --dims 3,4,5 -o s.mvds --seed 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("V=3 N=8") != std::string::npos);
  const demvc::MultiViewDataset ds = demvc::load_mvds(kWork / "s.mvds");
  CHECK(ds.n_views() == 3);
  CHECK(ds.features(2).cols() == 5);
}

TEST_CASE("usage errors exit with code 2") {
  ensure_dataset();
  const Result missing = run("train --dataset does_not_exist.mvds -o r --clusters 3");
  CHECK(missing.code == 2);
  CHECK(missing.out.find("does_not_exist.mvds") != std::string::npos);

  CHECK(run("train --dataset g.mvds -o r --clusters 3 --no-such-flag").code == 2);
  CHECK(run("train --dataset g.mvds -o r --clusters 3 --mode dec").code == 2);
  CHECK(run("train --dataset g.mvds -o r --clusters 40").code == 2);
  CHECK(run("eval no_such_run").code == 2);
  CHECK(run("frobnicate").code == 2);

  std::ofstream(kWork / "bad.mvds") << "not a dataset";
  const Result corrupt = run("train --dataset bad.mvds -o r --clusters 3");
  CHECK(corrupt.code == 2);
  CHECK(corrupt.out.find("bad.mvds") != std::string::npos);
}

TEST_CASE("train writes a complete, deterministic run directory") {
  ensure_dataset();
  REQUIRE(run("train --dataset g.mvds -o run_a --seed 4" + kTrainFlags).code == 0);
  REQUIRE(run("train --dataset g.mvds -o run_b --seed 4" + kTrainFlags).code == 0);
  for (const char* f : {"config.txt", "report.json", "loss_history.csv", "turns.csv",
                        "pretrain_loss.csv", "view1.aecp", "view2.aecp", "view1_centers.csv",
                        "view2_centers.csv", "embeddings.mvds"}) {
    CHECK(fs::exists(kWork / "run_a" / f));
  }
  CHECK(slurp(kWork / "run_a/report.json") == slurp(kWork / "run_b/report.json"));
  CHECK(slurp(kWork / "run_a/loss_history.csv") == slurp(kWork / "run_b/loss_history.csv"));
  CHECK(slurp(kWork / "run_a/view1.aecp") == slurp(kWork / "run_b/view1.aecp"));

  const json report = json::parse(slurp(kWork / "run_a/report.json"));
  CHECK(has_keys(report, {"mode", "iterations", "turns", "n_views", "n_samples",
                          "consensus_rate", "fused", "views"}));
  CHECK(report["mode"] == "demvc");
  CHECK(report["iterations"] == 12);
  CHECK(report["n_views"] == 2);
  CHECK(report["n_samples"] == 30);
  CHECK(report["fused"]["labels"].size() == 30);
  CHECK(has_keys(report["fused"]["metrics"], {"acc", "nmi", "ari"}));
  REQUIRE(report["views"].size() == 2);
  for (const json& v : report["views"]) {
    CHECK(has_keys(v, {"view", "labels", "soft", "metrics"}));
    CHECK(v["soft"].size() == 30);
    CHECK(v["soft"][0].size() == 3);
    const double acc = v["metrics"]["acc"];
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }

  const std::string history = slurp(kWork / "run_a/loss_history.csv");
  CHECK(history.rfind("iter,referred,L,Lr_1,Lr_2,Lc_1,Lc_2,consensus_rate\n", 0) == 0);

  const demvc::MultiViewDataset emb = demvc::load_mvds(kWork / "run_a/embeddings.mvds");
  CHECK(emb.n_samples() == 30);
  CHECK(emb.features(0).cols() == 3);

  const Result other = run("train --dataset g.mvds -o run_c --seed 5" + kTrainFlags);
  REQUIRE(other.code == 0);
  CHECK(slurp(kWork / "run_a/loss_history.csv") != slurp(kWork / "run_c/loss_history.csv"));
}

TEST_CASE("config file drives training and flags override it") {
  ensure_dataset();
  std::ofstream(kWork / "run.cfg") << "dataset = g.mvds\noutput = run_cfg\nn_clusters = 3\n"
                                      "hidden = 8\nembed_dim = 3\ntotal_finetune_iters = 8\n"
                                      "batches_per_turn = 4\npretrain_epochs = 2\nbatch_size = 8\n"
                                      "mode = coo\n";
  REQUIRE(run("train -c run.cfg --mode idec_per_view").code == 0);
  const json report = json::parse(slurp(kWork / "run_cfg/report.json"));
  CHECK(report["mode"] == "idec_per_view");
  CHECK(report["iterations"] == 8);
  CHECK(slurp(kWork / "run_cfg/config.txt").find("mode = idec_per_view") != std::string::npos);

  std::ofstream(kWork / "typo.cfg") << "n_cluster = 3\n";
  const Result typo = run("train -c typo.cfg");
  CHECK(typo.code == 2);
  CHECK(typo.out.find("n_cluster") != std::string::npos);
}

TEST_CASE("eval prints percent scores for fused and per-view labels") {
  ensure_dataset();
  if (!fs::exists(kWork / "run_a/report.json")) {
    REQUIRE(run("train --dataset g.mvds -o run_a --seed 4" + kTrainFlags).code == 0);
  }
  const Result r = run("eval run_a");
  REQUIRE(r.code == 0);
  const json out = json::parse(r.out);
  CHECK(has_keys(out["fused"], {"acc", "nmi", "ari", "consensus_rate"}));
  REQUIRE(out["views"].size() == 2);
  for (const json& v : out["views"]) CHECK(has_keys(v, {"acc", "nmi", "ari", "consensus_rate"}));

  const json report = json::parse(slurp(kWork / "run_a/report.json"));
  const double fused_acc = report["fused"]["metrics"]["acc"];
  CHECK(out["fused"]["acc"].get<double>() == doctest::Approx(std::round(fused_acc * 10000.0) / 100.0));

  // Scoring the fused labels against themselves is a perfect match.
  std::string labels;
  for (const json& l : report["fused"]["labels"]) labels += std::to_string(l.get<int>()) + "\n";
  std::ofstream(kWork / "fused.csv") << labels;
  const json self = json::parse(run("eval run_a --labels fused.csv").out);
  CHECK(self["fused"]["acc"].get<double>() == 100.0);
  CHECK(self["fused"]["nmi"].get<double>() == 100.0);
}

TEST_CASE("dump-embeddings re-embeds with the run's encoders") {
  ensure_dataset();
  if (!fs::exists(kWork / "run_a/report.json")) {
    REQUIRE(run("train --dataset g.mvds -o run_a --seed 4" + kTrainFlags).code == 0);
  }
  REQUIRE(run("dump-embeddings run_a -o dumped").code == 0);
  for (const char* f : {"embeddings.mvds", "embeddings_view1.csv", "embeddings_view2.csv",
                        "labels.csv", "fused_labels.csv"}) {
    CHECK(fs::exists(kWork / "dumped" / f));
  }
  CHECK(demvc::load_mvds(kWork / "dumped/embeddings.mvds") ==
        demvc::load_mvds(kWork / "run_a/embeddings.mvds"));
}

TEST_CASE("ablate sweeps every mode and eval prints one row per mode") {
  ensure_dataset();
  const Result r = run("ablate --dataset g.mvds -o sweep --seeds 0,1" + kTrainFlags);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(kWork / "sweep/ablation.csv"));
  const json ab = json::parse(slurp(kWork / "sweep/ablation.json"));
  CHECK(ab["runs"].size() == 8);
  CHECK(ab["modes"].size() == 4);

  const Result e = run("eval sweep");
  REQUIRE(e.code == 0);
  const json rows = json::parse(e.out);
  std::vector<std::string> modes;
  for (const json& row : rows) {
    CHECK(has_keys(row, {"acc", "nmi", "ari", "consensus_rate"}));
    modes.push_back(row["name"]);
  }
  CHECK(modes == std::vector<std::string>{"idec_per_view", "coo", "coo_setc", "demvc"});
}
