#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "demvc/run_config.hpp"

using namespace demvc;

namespace {

std::string usage_message(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const UsageError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parsing sets every field") {
  const RunConfig c = parse_run_config(
      "# desk run\n"
      "dataset = data/bench.mvds\n"
      "output=runs/a   # trailing comment\n"
      "image = 28x28\n"
      "metrics = false\n"
      "dump_embeddings = no\n"
      "seeds = 3, 4,5\n"
      "gamma = 0.25\n"
      "batch_size = 32\n"
      "batches_per_turn = 7\n"
      "total_finetune_iters = 70\n"
      "pretrain_epochs = 9\n"
      "n_clusters = 4\n"
      "first_referred_view = 2\n"
      "mode = coo_setc\n"
      "seed = 11\n"
      "consensus_threshold = 0.9\n"
      "hidden = 64,64,128\n"
      "embed_dim = 6\n"
      "learning_rate = 0.002\n"
      "kmeans_restarts = 3\n"
      "convolutional = true\n"
      "view_seeds = 8,9\n");
  CHECK(c.dataset == "data/bench.mvds");
  CHECK(c.output == "runs/a");
  CHECK(c.image == ImageShape{28, 28, 1});
  CHECK_FALSE(c.metrics);
  CHECK_FALSE(c.dump_embeddings);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4, 5});
  const TrainConfig& t = c.train;
  CHECK(t.gamma == 0.25);
  CHECK(t.batch_size == 32);
  CHECK(t.batches_per_turn == 7);
  CHECK(t.total_finetune_iters == 70);
  CHECK(t.pretrain_epochs == 9);
  CHECK(t.n_clusters == 4);
  CHECK(t.first_referred_view == 2);
  CHECK(t.mode == TrainMode::coo_setc);
  CHECK(t.seed == 11);
  CHECK(t.consensus_threshold == 0.9);
  CHECK(t.hidden == std::vector<std::size_t>{64, 64, 128});
  CHECK(t.embed_dim == 6);
  CHECK(t.learning_rate == 0.002);
  CHECK(t.kmeans_restarts == 3);
  CHECK(t.convolutional);
  CHECK(t.view_seeds == std::vector<std::uint64_t>{8, 9});
}

TEST_CASE("text form round trips") {
  RunConfig c;
  c.dataset = "x.mvds";
  c.output = "out";
  c.image = ImageShape{16, 16, 3};
  c.seeds = {7};
  c.train.gamma = 0.1;
  c.train.learning_rate = 1e-3;
  c.train.consensus_threshold = 0.999;
  c.train.hidden = {};
  c.train.n_clusters = 10;
  c.train.mode = TrainMode::idec_per_view;
  const RunConfig back = parse_run_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.train.gamma == c.train.gamma);
  CHECK(back.train.learning_rate == c.train.learning_rate);
  CHECK(back.train.hidden.empty());
  CHECK(back.image == c.image);
  CHECK(back.train.mode == TrainMode::idec_per_view);
}

TEST_CASE("errors name the line") {
  const std::string unknown = usage_message("gamma = 0.1\nbatchsize = 3\n");
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(unknown.find("batchsize") != std::string::npos);
  CHECK(usage_message("gamma 0.1\n").find("line 1") != std::string::npos);
  CHECK(usage_message("batch_size = -3\n").find("batch_size") != std::string::npos);
  CHECK(usage_message("mode = dec\n").find("line 1") != std::string::npos);
  CHECK(usage_message("hidden = 64,,2\n").find("hidden") != std::string::npos);
  CHECK(usage_message("metrics = maybe\n").find("metrics") != std::string::npos);
  CHECK(usage_message("image = 28\n").find("image") != std::string::npos);
}

TEST_CASE("image shapes") {
  CHECK(parse_image_shape("28x28") == ImageShape{28, 28, 1});
  CHECK(parse_image_shape("32x16x3") == ImageShape{32, 16, 3});
  CHECK_THROWS_AS(parse_image_shape("0x28"), UsageError);
  CHECK_THROWS_AS(parse_image_shape("28x28x1x1"), UsageError);
}

TEST_CASE("loading from disk and validation") {
  const auto file = std::filesystem::temp_directory_path() / "demvc_run_config.txt";
  std::ofstream(file) << "n_clusters = 3\nseeds = 1\n";
  const RunConfig c = load_run_config(file);
  CHECK(c.train.n_clusters == 3);
  CHECK_NOTHROW(c.validate(2, 30));
  CHECK_THROWS_AS(c.validate(2, 2), UsageError);
  RunConfig empty_seeds = c;
  empty_seeds.seeds.clear();
  CHECK_THROWS_AS(empty_seeds.validate(2, 30), UsageError);
  std::filesystem::remove(file);
  CHECK_THROWS_AS(load_run_config(file), UsageError);
}
