#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "demvc/ablation.hpp"
#include "demvc/checkpoint.hpp"
#include "demvc/kernels.hpp"
#include "demvc/mvds.hpp"
#include "demvc/run_artifacts.hpp"
#include "demvc/synth.hpp"

namespace fs = std::filesystem;
using namespace demvc;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void require_exists(const fs::path& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is required");
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path.string());
}

void print_summary(const MultiViewDataset& ds, const fs::path& path) {
  std::cout << "wrote " << path.string() << ": V=" << ds.n_views() << " N=" << ds.n_samples()
            << " dims=";
  for (std::size_t v = 0; v < ds.n_views(); ++v) {
    std::cout << (v ? "," : "") << ds.features(v).cols();
  }
  std::cout << '\n';
  if (ds.has_labels()) {
    std::map<std::int32_t, std::size_t> hist;
    for (auto l : *ds.labels()) ++hist[l];
    std::cout << "labels:";
    for (const auto& [label, count] : hist) std::cout << ' ' << label << ':' << count;
    std::cout << '\n';
  } else {
    std::cout << "labels: none\n";
  }
}

// Flag overrides shared by train and ablate, applied on top of the config file.
struct TrainFlags {
  std::string config;
  std::map<std::string, std::string> values;

  void add(CLI::App* app) {
    app->add_option("-c,--config", config, "key=value config file");
    bind(app, "--dataset", "dataset", "MVDS file or CSV directory");
    bind(app, "-o,--output", "output", "output directory");
    bind(app, "--image", "image", "image shape HxW[xC] for CSV inputs");
    bind(app, "--gamma", "gamma", "clustering loss weight");
    bind(app, "--batch-size", "batch_size", "samples per optimizer step");
    bind(app, "--batches-per-turn", "batches_per_turn", "optimizer steps per referred view");
    bind(app, "--iters", "total_finetune_iters", "fine-tuning optimizer steps");
    bind(app, "--pretrain-epochs", "pretrain_epochs", "autoencoder pretraining epochs");
    bind(app, "--clusters", "n_clusters", "number of clusters K");
    bind(app, "--mode", "mode", "demvc, coo, coo_setc or idec_per_view");
    bind(app, "--seed", "seed", "random seed");
    bind(app, "--first-referred", "first_referred_view", "first referred view (1-based)");
    bind(app, "--consensus-threshold", "consensus_threshold", "early-stop consensus rate");
    bind(app, "--hidden", "hidden", "comma-separated hidden layer widths");
    bind(app, "--embed-dim", "embed_dim", "embedding dimension");
    bind(app, "--lr", "learning_rate", "Adam learning rate");
    bind(app, "--kmeans-restarts", "kmeans_restarts", "k-means restarts");
    bind(app, "--embeddings", "dump_embeddings", "write embeddings.mvds (true/false)");
  }

  void bind(CLI::App* app, const std::string& flag, const std::string& key,
            const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config.empty()) {
      require_exists(config, "config");
      cfg = load_run_config(config);
    }
    for (const auto& [key, value] : values) cfg.set(key, value);
    return cfg;
  }
};

MultiViewDataset load_input(const fs::path& path, std::optional<ImageShape> image) {
  require_exists(path, "dataset");
  return load_dataset(path, image);
}

// Labels from a dataset (MVDS or CSV directory) or a single-column CSV file.
Labels load_labels(const fs::path& path) {
  require_exists(path, "labels");
  if (fs::is_regular_file(path) && path.extension() == ".csv") {
    const Tensor m = read_csv_matrix(path);
    Labels out;
    for (double x : m.values()) out.push_back(static_cast<std::int32_t>(x));
    return out;
  }
  const MultiViewDataset ds = load_dataset(path);
  if (!ds.has_labels()) throw UsageError("no labels in " + path.string());
  return *ds.labels();
}

Labels labels_from_json(const nlohmann::json& j) { return j.get<Labels>(); }

int cmd_train(const TrainFlags& flags) {
  RunConfig cfg = flags.resolve();
  if (cfg.output.empty()) throw UsageError("output directory is required");
  const MultiViewDataset data = load_input(cfg.dataset, cfg.image);
  cfg.validate(data.n_views(), data.n_samples());
  std::cerr << "training " << to_string(cfg.train.mode) << " on " << cfg.dataset.string()
            << " (V=" << data.n_views() << ", N=" << data.n_samples() << ")\n";
  const FitResult result = fit(data, cfg.train);
  write_run(cfg.output, cfg, result, data);
  std::cout << "iterations " << result.report.iterations << ", turns " << result.report.turns
            << ", consensus_rate " << result.report.consensus_rate << '\n';
  if (result.report.fused_scores) {
    const auto& s = *result.report.fused_scores;
    std::printf("fused acc %.2f nmi %.2f ari %.2f\n", s.acc * 100, s.nmi * 100, s.ari * 100);
  }
  std::cout << "run written to " << cfg.output.string() << '\n';
  return 0;
}

nlohmann::json eval_row(const std::string& name, const ClusteringScores& s, double consensus) {
  nlohmann::json j = scores_json_percent(s);
  j["consensus_rate"] = std::round(consensus * 10000.0) / 100.0;
  j["name"] = name;
  return j;
}

int cmd_eval_ablation(const fs::path& dir) {
  const nlohmann::json ab = read_json(dir / "ablation.json");
  std::cout << "[\n";
  const auto& modes = ab.at("modes");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& m = modes[i];
    const ClusteringScores s{m.at("acc").at("mean").get<double>(),
                             m.at("nmi").at("mean").get<double>(),
                             m.at("ari").at("mean").get<double>()};
    nlohmann::json row = eval_row(m.at("mode").get<std::string>(), s,
                                  m.at("consensus_rate").at("mean").get<double>());
    row["runs"] = m.at("runs");
    row["failed"] = m.at("failed");
    std::cout << "  " << row.dump() << (i + 1 < modes.size() ? "," : "") << '\n';
  }
  std::cout << "]\n";
  return 0;
}

int cmd_eval(const fs::path& dir, const std::string& labels_path) {
  require_exists(dir, "run directory");
  if (fs::exists(dir / "ablation.json")) return cmd_eval_ablation(dir);
  require_exists(dir / "report.json", "report");
  const nlohmann::json report = read_json(dir / "report.json");
  Labels truth;
  if (!labels_path.empty()) {
    truth = load_labels(labels_path);
  } else {
    require_exists(dir / "config.txt", "run config");
    const RunConfig cfg = load_run_config(dir / "config.txt");
    require_exists(cfg.dataset, "dataset");
    const MultiViewDataset ds = load_dataset(cfg.dataset, cfg.image);
    if (!ds.has_labels()) {
      throw UsageError("dataset " + cfg.dataset.string() + " has no labels; pass --labels");
    }
    truth = *ds.labels();
  }
  const double consensus = report.at("consensus_rate").get<double>();
  nlohmann::json out;
  out["mode"] = report.at("mode");
  out["fused"] = eval_row("fused", evaluate(truth, labels_from_json(report.at("fused").at("labels"))),
                          consensus);
  out["views"] = nlohmann::json::array();
  for (const auto& v : report.at("views")) {
    out["views"].push_back(eval_row("view" + std::to_string(v.at("view").get<int>()),
                                    evaluate(truth, labels_from_json(v.at("labels"))), consensus));
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_ablate(const TrainFlags& flags, const std::string& seeds) {
  RunConfig cfg = flags.resolve();
  if (!seeds.empty()) cfg.set("seeds", seeds);
  if (cfg.output.empty()) throw UsageError("output directory is required");
  const MultiViewDataset data = load_input(cfg.dataset, cfg.image);
  if (!data.has_labels()) throw UsageError("ablation needs labels in " + cfg.dataset.string());
  cfg.validate(data.n_views(), data.n_samples());
  fs::create_directories(cfg.output);
  write_text(cfg.output / "config.txt", cfg.to_text());
  const auto runs = run_ablation(data, cfg, [](const AblationRun& r) {
    if (r.ok) {
      std::fprintf(stderr, "%-14s seed %-4llu acc %6.2f consensus %.4f\n", to_string(r.mode),
                   static_cast<unsigned long long>(r.seed), r.fused.acc * 100, r.consensus_rate);
    } else {
      std::fprintf(stderr, "%-14s seed %-4llu FAILED: %s\n", to_string(r.mode),
                   static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
  });
  const auto rows = aggregate(runs);
  write_text(cfg.output / "ablation.json", ablation_to_json(runs, rows).dump(1) + "\n");
  write_text(cfg.output / "ablation.csv", ablation_csv(rows));
  std::printf("%-14s %5s %15s %15s %15s\n", "mode", "runs", "acc", "nmi", "ari");
  for (const auto& r : rows) {
    std::printf("%-14s %5zu %7.2f+-%-6.2f %7.2f+-%-6.2f %7.2f+-%-6.2f\n", to_string(r.mode),
                r.runs, r.acc.mean * 100, r.acc.std * 100, r.nmi.mean * 100, r.nmi.std * 100,
                r.ari.mean * 100, r.ari.std * 100);
  }
  return 0;
}

int cmd_dump(const fs::path& dir, const std::string& dataset_path, const fs::path& out_dir) {
  require_exists(dir, "run directory");
  std::optional<ImageShape> image;
  fs::path ds_path = dataset_path;
  if (ds_path.empty() || fs::exists(dir / "config.txt")) {
    require_exists(dir / "config.txt", "run config");
    const RunConfig cfg = load_run_config(dir / "config.txt");
    if (ds_path.empty()) ds_path = cfg.dataset;
    image = cfg.image;
  }
  const MultiViewDataset data = load_input(ds_path, image);
  std::vector<Autoencoder> aes;
  for (std::size_t v = 1; v <= data.n_views(); ++v) {
    const fs::path ck = dir / ("view" + std::to_string(v) + ".aecp");
    require_exists(ck, "checkpoint");
    aes.push_back(load_checkpoint(ck).autoencoder);
  }
  const MultiViewDataset emb = embed_views(aes, data);
  const fs::path target = out_dir.empty() ? dir : out_dir;
  fs::create_directories(target);
  save_mvds(target / "embeddings.mvds", emb);
  for (std::size_t v = 0; v < emb.n_views(); ++v) {
    write_csv_matrix(target / ("embeddings_view" + std::to_string(v + 1) + ".csv"),
                     emb.features(v));
  }
  if (emb.has_labels()) {
    std::string text;
    for (auto l : *emb.labels()) text += std::to_string(l) + '\n';
    write_text(target / "labels.csv", text);
  }
  if (fs::exists(dir / "report.json")) {
    const nlohmann::json report = read_json(dir / "report.json");
    std::string text;
    for (auto l : labels_from_json(report.at("fused").at("labels"))) text += std::to_string(l) + '\n';
    write_text(target / "fused_labels.csv", text);
  }
  print_summary(emb, target / "embeddings.mvds");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();
  CLI::App app{"Deep embedded multi-view clustering with collaborative training"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a dataset");
  synth->require_subcommand(1);
  std::string out_path;
  std::uint64_t seed = 0;
  std::string input;
  std::string image_text;

  GaussianMultiviewSpec gspec;
  std::size_t g_views = 2;
  std::vector<std::size_t> g_dims;
  auto* gauss = synth->add_subcommand("gaussian", "Gaussian clusters seen through random views");
  gauss->add_option("--classes", gspec.n_clusters, "number of classes")->capture_default_str();
  gauss->add_option("--per-class", gspec.n_per_class, "samples per class")->capture_default_str();
  gauss->add_option("--views", g_views, "number of views")->capture_default_str();
  gauss->add_option("--dims", g_dims, "feature dimension per view (default 32 each)")
      ->delimiter(',');
  gauss->add_option("--latent", gspec.latent_dim, "latent dimension")->capture_default_str();
  gauss->add_option("--separation", gspec.separation, "distance between adjacent class means")
      ->capture_default_str();
  gauss->add_option("--nuisance", gspec.nuisance, "nuisance mode spacing relative to classes")
      ->capture_default_str();

  std::size_t p_views = 2;
  auto* paired = synth->add_subcommand("paired", "extra views of same-label samples");
  paired->add_option("--views", p_views, "number of views")->capture_default_str();
  auto* noisy = synth->add_subcommand("noisy", "add uniform pixel noise to every view");
  auto* rotated = synth->add_subcommand("rotated", "randomly rotate every view");
  std::string source = "paired_clean";
  auto* noisy_rot = synth->add_subcommand("noisy-rotating", "rotated view plus noisy view");
  noisy_rot->add_option("--source", source, "paired_clean or rotated")->capture_default_str();

  for (auto* sub : {gauss, paired, noisy, rotated, noisy_rot}) {
    sub->add_option("-o,--output", out_path, "output MVDS file")->required();
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    if (sub != gauss) {
      sub->add_option("-i,--input", input, "labeled MVDS file or CSV directory")->required();
      sub->add_option("--image", image_text, "image shape HxW[xC] for CSV inputs");
    }
  }

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "pretrain and fine-tune one run");
  train_flags.add(train);

  std::string eval_dir;
  std::string eval_labels;
  auto* eval = app.add_subcommand("eval", "score a run or ablation directory");
  eval->add_option("dir", eval_dir, "run or ablation directory")->required();
  eval->add_option("--labels", eval_labels, "labels source (dataset or one-column CSV)");

  TrainFlags ablate_flags;
  std::string seeds;
  auto* ablate = app.add_subcommand("ablate", "sweep all modes over several seeds");
  ablate_flags.add(ablate);
  ablate->add_option("--seeds", seeds, "comma-separated seeds (default 0,1,2,3,4)");

  std::string dump_dir;
  std::string dump_dataset;
  std::string dump_out;
  auto* dump = app.add_subcommand("dump-embeddings", "embed a dataset with a run's encoders");
  dump->add_option("dir", dump_dir, "run directory")->required();
  dump->add_option("--dataset", dump_dataset, "dataset (default: the run's dataset)");
  dump->add_option("-o,--output", dump_out, "output directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const std::optional<ImageShape> image =
          image_text.empty() ? std::nullopt : std::optional(parse_image_shape(image_text));
      MultiViewDataset ds;
      if (gauss->parsed()) {
        gspec.seed = seed;
        gspec.view_dims = g_dims.empty() ? std::vector<std::size_t>(g_views, 32) : g_dims;
        if (!g_dims.empty() && g_dims.size() != g_views && gauss->count("--views") > 0) {
          throw UsageError("--dims lists " + std::to_string(g_dims.size()) +
                           " views but --views is " + std::to_string(g_views));
        }
        ds = make_gaussian_multiview(gspec).dataset;
      } else {
        const MultiViewDataset base = load_input(input, image);
        if (paired->parsed()) {
          ds = make_paired_views(base, p_views, seed);
        } else if (noisy->parsed() || rotated->parsed()) {
          std::vector<ViewData> views;
          for (std::size_t v = 0; v < base.n_views(); ++v) {
            const std::uint64_t vs = seed + v;
            views.push_back(noisy->parsed() ? make_noisy_view(base.view(v), vs)
                                            : make_rotated_view(base.view(v), vs));
          }
          ds = MultiViewDataset(std::move(views), base.labels());
        } else {
          NoiseSource src;
          if (source == "paired_clean") src = NoiseSource::paired_clean;
          else if (source == "rotated") src = NoiseSource::rotated;
          else throw UsageError("unknown --source \"" + source + "\"");
          ds = make_noisy_rotating(base, seed, src);
        }
      }
      const fs::path out(out_path);
      if (out.has_parent_path() && !fs::is_directory(out.parent_path())) {
        throw UsageError("output directory not found: " + out.parent_path().string());
      }
      save_mvds(out, ds);
      print_summary(ds, out);
      return 0;
    }
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(eval_dir, eval_labels);
    if (ablate->parsed()) return cmd_ablate(ablate_flags, seeds);
    if (dump->parsed()) return cmd_dump(dump_dir, dump_dataset, dump_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
