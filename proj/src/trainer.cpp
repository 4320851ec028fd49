#include "demvc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "demvc/kmeans.hpp"
#include "demvc/random.hpp"

namespace demvc {

namespace {

enum SeedStream : std::uint64_t {
  kNetworkInit = 0x4E49,
  kPretrain = 0x5054,
  kKMeans = 0x4B4D,
  kBatches = 0x4253,
};

void check_views(const TrainState& state, const MultiViewDataset& data) {
  if (data.n_views() != state.n_views()) {
    throw DimensionError("state has " + std::to_string(state.n_views()) +
                         " views but dataset has " + std::to_string(data.n_views()));
  }
}

void reshuffle(TrainState& state, std::size_t n) {
  state.order.resize(n);
  std::iota(state.order.begin(), state.order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(state.config.seed, {kBatches, state.epoch}));
  std::shuffle(state.order.begin(), state.order.end(), rng);
  state.cursor = 0;
  ++state.epoch;
}

std::vector<std::size_t> next_batch(TrainState& state, std::size_t n) {
  if (state.order.size() != n || state.cursor >= n) reshuffle(state, n);
  const std::size_t take = std::min(state.config.batch_size, n - state.cursor);
  std::vector<std::size_t> rows(state.order.begin() + static_cast<std::ptrdiff_t>(state.cursor),
                                state.order.begin() + static_cast<std::ptrdiff_t>(state.cursor + take));
  state.cursor += take;
  return rows;
}

// Reorders `centers` so that cluster j matches reference cluster j as often
// as possible on the given labels.
Tensor align_centers(const Tensor& centers, const Labels& own, const Labels& reference,
                     std::size_t k) {
  std::vector<std::vector<double>> co(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < own.size(); ++i) {
    co[static_cast<std::size_t>(reference[i])][static_cast<std::size_t>(own[i])] += 1.0;
  }
  const auto match = max_weight_assignment(co);
  Tensor aligned(centers.shape());
  for (std::size_t j = 0; j < k; ++j) {
    std::ranges::copy(centers.row(match[j]), aligned.row(j).begin());
  }
  return aligned;
}

std::vector<double> flatten_view(TrainState& state, std::size_t v) {
  std::vector<double> flat;
  for (const Tensor* p : state.autoencoders[v].parameters()) {
    flat.insert(flat.end(), p->values().begin(), p->values().end());
  }
  const Tensor& c = state.heads[v].centers();
  flat.insert(flat.end(), c.values().begin(), c.values().end());
  return flat;
}

}  // namespace

const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::demvc: return "demvc";
    case TrainMode::coo: return "coo";
    case TrainMode::coo_setc: return "coo_setc";
    case TrainMode::idec_per_view: return "idec_per_view";
  }
  return "?";
}

TrainMode parse_mode(const std::string& name) {
  for (TrainMode m : kAllModes) {
    if (name == to_string(m)) return m;
  }
  throw UsageError("unknown mode \"" + name +
                   "\" (expected demvc, coo, coo_setc or idec_per_view)");
}

TrainConfig TrainConfig::full_scale_preset() {
  TrainConfig c;
  c.batch_size = 256;
  c.batches_per_turn = 200;
  c.total_finetune_iters = 20000;
  c.pretrain_epochs = 500;
  return c;
}

void TrainConfig::validate(std::size_t n_views, std::size_t n_samples) const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (batches_per_turn < 1) throw UsageError("batches_per_turn must be >= 1");
  if (total_finetune_iters < batches_per_turn) {
    throw UsageError("total_finetune_iters must be >= batches_per_turn");
  }
  if (pretrain_epochs < 1) throw UsageError("pretrain_epochs must be >= 1");
  if (n_clusters < 2) throw UsageError("n_clusters must be >= 2");
  if (n_views < 1) throw UsageError("dataset has no views");
  if (first_referred_view < 1 || first_referred_view > n_views) {
    throw UsageError("first_referred_view must lie in 1.." + std::to_string(n_views));
  }
  if (n_samples < n_clusters) {
    throw UsageError("need at least as many samples (" + std::to_string(n_samples) +
                     ") as clusters (" + std::to_string(n_clusters) + ")");
  }
  if (!view_seeds.empty() && view_seeds.size() != n_views) {
    throw UsageError("view_seeds must list one seed per view");
  }
  if (embed_dim < 1) throw UsageError("embed_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (!(consensus_threshold >= 0.0)) throw UsageError("consensus_threshold must be >= 0");
}

std::uint64_t TrainConfig::view_seed(std::size_t view) const {
  if (!view_seeds.empty()) return view_seeds.at(view);
  return derive_seed(seed, {0x5657, view});
}

PretrainedViews pretrain_views(const MultiViewDataset& data, const TrainConfig& config) {
  config.validate(data.n_views(), data.n_samples());
  PretrainedViews out;
  for (std::size_t v = 0; v < data.n_views(); ++v) {
    const ViewData& view = data.view(v);
    AutoencoderConfig ac;
    ac.input_dim = view.features.cols();
    ac.hidden = config.hidden;
    ac.embed_dim = config.embed_dim;
    if (config.convolutional && view.image) {
      ac.convolutional = true;
      ac.image = *view.image;
    }
    const std::uint64_t vs = config.view_seed(v);
    Autoencoder ae = Autoencoder::build(ac, v + 1, derive_seed(vs, {kNetworkInit}));
    PretrainOptions opts;
    opts.epochs = config.pretrain_epochs;
    opts.batch_size = config.batch_size;
    opts.seed = derive_seed(vs, {kPretrain});
    opts.learning_rate = config.learning_rate;
    // Only this view's feature matrix is handed to the trainer.
    PretrainResult r = pretrain(ae, view.features, opts);
    out.autoencoders.push_back(std::move(ae));
    out.loss_curves.push_back(std::move(r.epoch_loss));
  }
  return out;
}

TrainState initialize(const MultiViewDataset& data, const TrainConfig& config,
                      PretrainedViews pretrained) {
  config.validate(data.n_views(), data.n_samples());
  if (pretrained.autoencoders.size() != data.n_views()) {
    throw UsageError("pretrained networks do not match the number of views");
  }
  TrainState state;
  state.config = config;
  state.autoencoders = std::move(pretrained.autoencoders);
  state.pretrain_loss = std::move(pretrained.loss_curves);
  const std::size_t n_views = data.n_views();
  const std::size_t k = config.n_clusters;
  const std::size_t ref = config.first_referred_view - 1;

  std::vector<Tensor> embeddings(n_views);
  for (std::size_t v = 0; v < n_views; ++v) {
    embeddings[v] = state.autoencoders[v].encode(data.features(v));
  }
  KMeansOptions km;
  km.restarts = config.kmeans_restarts;
  const KMeansResult referred =
      kmeans(embeddings[ref], k, derive_seed(config.view_seed(ref), {kKMeans}), km);

  state.heads.resize(n_views);
  const bool shared = config.mode == TrainMode::demvc || config.mode == TrainMode::coo_setc;
  if (shared) {
    init_shared_centers(state.heads, referred.centers);
  } else {
    for (std::size_t v = 0; v < n_views; ++v) {
      if (v == ref) {
        state.heads[v] = ClusterHead(referred.centers);
        continue;
      }
      const KMeansResult own =
          kmeans(embeddings[v], k, derive_seed(config.view_seed(v), {kKMeans}), km);
      state.heads[v] = ClusterHead(align_centers(own.centers, own.labels, referred.labels, k));
    }
  }
  for (const auto& h : state.heads) state.initial_centers.push_back(h.centers());

  state.network_optimizers.assign(n_views, AdamState{});
  state.center_optimizers.assign(n_views, AdamState{});
  for (std::size_t v = 0; v < n_views; ++v) {
    state.network_optimizers[v].learning_rate = config.learning_rate;
    state.center_optimizers[v].learning_rate = config.learning_rate;
  }
  state.current_referred = config.first_referred_view;
  state.consensus = consensus_rate(state, data);
  return state;
}

const TargetDistribution& target_for_view(const TrainState& state, std::size_t view) {
  if (state.config.mode == TrainMode::idec_per_view) {
    if (state.own_targets.size() != state.n_views()) {
      throw PhaseError("per-view targets are not set; run a turn first");
    }
    return state.own_targets[view];
  }
  if (!state.shared_target) throw PhaseError("shared target is not set; run a turn first");
  return *state.shared_target;
}

BatchLoss total_loss(const TrainState& state, const MultiViewDataset& data,
                     std::span<const std::size_t> rows) {
  check_views(state, data);
  if (rows.empty()) throw UsageError("empty batch");
  BatchLoss out;
  const double nb = static_cast<double>(rows.size());
  for (std::size_t v = 0; v < state.n_views(); ++v) {
    const TargetDistribution& target = target_for_view(state, v);
    const Tensor x = gather_rows(data.features(v), rows);
    const Tensor z = state.autoencoders[v].encode(x);
    const double lr = reconstruction_loss_and_grad(x, state.autoencoders[v].decode(z), nullptr);
    const TargetDistribution p{gather_rows(target.values, rows)};
    const double lc = kl_loss(p, soft_assign(state.heads[v], z)) / nb;
    out.reconstruction.push_back(lr);
    out.clustering.push_back(lc);
    out.total += lr + state.config.gamma * lc;
  }
  return out;
}

BatchGradients loss_gradients(TrainState& state, const MultiViewDataset& data,
                              std::span<const std::size_t> rows) {
  check_views(state, data);
  if (rows.empty()) throw UsageError("empty batch");
  BatchGradients out;
  const double nb = static_cast<double>(rows.size());
  const double gamma = state.config.gamma;
  for (std::size_t v = 0; v < state.n_views(); ++v) {
    const TargetDistribution& target = target_for_view(state, v);
    const Tensor x = gather_rows(data.features(v), rows);
    Autoencoder& ae = state.autoencoders[v];
    Autoencoder::Pass pass = ae.forward(x);
    Tensor grad_recon;
    const double lr = reconstruction_loss_and_grad(x, pass.reconstruction, &grad_recon);
    const TargetDistribution p{gather_rows(target.values, rows)};
    ClusteringGrads cg = clustering_backward(state.heads[v], pass.embedding, p);
    out.clamped += cg.clamped;
    const double scale = gamma / nb;
    for (double& g : cg.embeddings.values()) g *= scale;
    for (double& g : cg.centers.values()) g *= scale;
    ViewGradients vg;
    vg.network = ae.backward(grad_recon, &cg.embeddings);
    vg.centers = std::move(cg.centers);
    out.views.push_back(std::move(vg));
    const double lc = cg.loss / nb;
    out.loss.reconstruction.push_back(lr);
    out.loss.clustering.push_back(lc);
    out.loss.total += lr + gamma * lc;
  }
  return out;
}

void run_turn(TrainState& state, const MultiViewDataset& data) {
  check_views(state, data);
  const TrainConfig& cfg = state.config;
  const std::size_t n_views = state.n_views();
  const std::size_t n = data.n_samples();
  const std::size_t referred = state.current_referred;

  // Targets are computed once over the full dataset and held for the turn.
  if (cfg.mode == TrainMode::idec_per_view) {
    state.own_targets.clear();
    for (std::size_t v = 0; v < n_views; ++v) {
      state.own_targets.push_back(target_distribution(
          soft_assign(state.heads[v], state.autoencoders[v].encode(data.features(v)))));
    }
  } else {
    const std::size_t r = referred - 1;
    state.shared_target = target_distribution(
        soft_assign(state.heads[r], state.autoencoders[r].encode(data.features(r))));
  }
  const Tensor& tracked = target_for_view(state, referred - 1).values;

  TurnRecord turn;
  turn.turn = state.turn_count;
  turn.referred = referred;
  turn.first_iter = state.iter_count;
  turn.target_checksum_start = checksum(tracked);
  std::vector<std::vector<double>> before(n_views);
  for (std::size_t v = 0; v < n_views; ++v) before[v] = flatten_view(state, v);

  const std::size_t remaining =
      cfg.total_finetune_iters > state.iter_count ? cfg.total_finetune_iters - state.iter_count : 0;
  const std::size_t steps = std::min(cfg.batches_per_turn, remaining);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto rows = next_batch(state, n);
    BatchGradients g = loss_gradients(state, data, rows);
    for (double x : g.loss.reconstruction) {
      if (!std::isfinite(x)) throw EvaluationError("reconstruction loss became non-finite");
    }
    for (double x : g.loss.clustering) {
      if (!std::isfinite(x)) throw EvaluationError("clustering loss became non-finite");
    }
    state.clamp_events += g.clamped;
    for (std::size_t v = 0; v < n_views; ++v) {
      std::vector<Tensor*> params = state.autoencoders[v].parameters();
      adam_step(state.network_optimizers[v], params, g.views[v].network);
      state.autoencoders[v].mark_updated();
      Tensor* centers = &state.heads[v].centers();
      adam_step(state.center_optimizers[v], std::span<Tensor* const>(&centers, 1),
                std::span<const Tensor>(&g.views[v].centers, 1));
    }
    IterationRecord rec;
    rec.iter = state.iter_count;
    rec.referred = referred;
    rec.total = g.loss.total;
    rec.reconstruction = std::move(g.loss.reconstruction);
    rec.clustering = std::move(g.loss.clustering);
    rec.consensus_rate = state.consensus;
    state.loss_history.push_back(std::move(rec));
    ++state.iter_count;
  }

  turn.steps = steps;
  turn.target_checksum_end = checksum(target_for_view(state, referred - 1).values);
  for (std::size_t v = 0; v < n_views; ++v) {
    const auto after = flatten_view(state, v);
    double s = 0.0;
    for (std::size_t i = 0; i < after.size(); ++i) {
      const double d = after[i] - before[v][i];
      s += d * d;
    }
    turn.parameter_change.push_back(std::sqrt(s));
  }
  state.consensus = consensus_rate(state, data);
  turn.consensus_rate = state.consensus;
  state.turns.push_back(std::move(turn));
  ++state.turn_count;
  state.current_referred = referred % n_views + 1;
}

std::vector<SoftAssignment> soft_assignments(const TrainState& state,
                                             const MultiViewDataset& data) {
  check_views(state, data);
  std::vector<SoftAssignment> out;
  for (std::size_t v = 0; v < state.n_views(); ++v) {
    out.push_back(soft_assign(state.heads[v], state.autoencoders[v].encode(data.features(v))));
  }
  return out;
}

std::vector<Labels> predict_per_view(const TrainState& state, const MultiViewDataset& data) {
  std::vector<Labels> out;
  for (const auto& q : soft_assignments(state, data)) out.push_back(hard_labels(q.values));
  return out;
}

Labels predict_fused(const TrainState& state, const MultiViewDataset& data) {
  return fuse(soft_assignments(state, data));
}

double consensus_rate(const TrainState& state, const MultiViewDataset& data) {
  return consensus_rate(predict_per_view(state, data));
}

Labels fuse(std::span<const SoftAssignment> soft) {
  if (soft.empty()) throw UsageError("no views to fuse");
  const Tensor& first = soft.front().values;
  Tensor mean(first.shape());
  for (const auto& q : soft) {
    require_same_shape(first, q.values, "fused soft assignments");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += q.values[i];
  }
  const double inv = 1.0 / static_cast<double>(soft.size());
  for (double& x : mean.values()) x *= inv;
  return hard_labels(mean);
}

double consensus_rate(std::span<const Labels> per_view) {
  if (per_view.empty()) throw UsageError("no views");
  const std::size_t n = per_view.front().size();
  if (n == 0) return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool same = true;
    for (const auto& l : per_view) {
      if (l.size() != n) throw DimensionError("label vectors differ in length");
      same = same && l[i] == per_view.front()[i];
    }
    if (same) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

AssignmentReport make_report(const TrainState& state, const MultiViewDataset& data) {
  AssignmentReport r;
  r.mode = state.config.mode;
  r.per_view_soft = soft_assignments(state, data);
  for (const auto& q : r.per_view_soft) r.per_view_hard.push_back(hard_labels(q.values));
  r.fused_hard = fuse(r.per_view_soft);
  r.consensus_rate = consensus_rate(r.per_view_hard);
  r.iterations = state.iter_count;
  r.turns = state.turn_count;
  if (data.has_labels()) {
    std::vector<ClusteringScores> per_view;
    for (const auto& l : r.per_view_hard) per_view.push_back(evaluate(*data.labels(), l));
    r.per_view_scores = std::move(per_view);
    r.fused_scores = evaluate(*data.labels(), r.fused_hard);
  }
  return r;
}

FitResult fit(const MultiViewDataset& data, const TrainConfig& config,
              const PretrainedViews* pretrained) {
  config.validate(data.n_views(), data.n_samples());
  PretrainedViews pre = pretrained ? *pretrained : pretrain_views(data, config);
  FitResult out;
  out.state = initialize(data, config, std::move(pre));
  TrainState& state = out.state;
  // The consensus stop is only consulted once every view has been referred.
  while (state.iter_count < config.total_finetune_iters) {
    run_turn(state, data);
    if (state.turn_count >= state.n_views() && state.consensus >= config.consensus_threshold) {
      break;
    }
  }
  out.report = make_report(state, data);
  return out;
}

}  // namespace demvc
