#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demvc/adam.hpp"
#include "demvc/autoencoder.hpp"
#include "demvc/cluster_head.hpp"
#include "demvc/dataset.hpp"
#include "demvc/metrics.hpp"

namespace demvc {

// Ablation ladder:
//   idec_per_view  every view self-trains on its own target, no sharing
//   coo            rotating shared target, per-view k-means centers
//   coo_setc       rotating shared target, all views start from the first
//                  referred view's k-means centers
//   demvc          coo_setc training with the view-averaged prediction as
//                  the headline result
enum class TrainMode { demvc, coo, coo_setc, idec_per_view };

const char* to_string(TrainMode mode);
TrainMode parse_mode(const std::string& name);
inline constexpr TrainMode kAllModes[] = {TrainMode::idec_per_view, TrainMode::coo,
                                          TrainMode::coo_setc, TrainMode::demvc};

struct TrainConfig {
  double gamma = 0.1;
  std::size_t batch_size = 64;
  std::size_t batches_per_turn = 50;
  std::size_t total_finetune_iters = 2000;
  std::size_t pretrain_epochs = 100;
  std::size_t n_clusters = 0;
  std::size_t first_referred_view = 1;  // 1-based
  TrainMode mode = TrainMode::demvc;
  std::uint64_t seed = 0;
  double consensus_threshold = 0.999;

  std::vector<std::size_t> hidden{500, 500, 2000};
  std::size_t embed_dim = 10;
  double learning_rate = 1e-3;
  std::size_t kmeans_restarts = 10;
  // Use the convolutional autoencoder on views that carry an image shape.
  bool convolutional = false;
  // Per-view seeds for network initialization, pretraining shuffles and
  // per-view k-means. Empty derives them from `seed` and the view index.
  std::vector<std::uint64_t> view_seeds;

  // Full-scale schedule: batch 256, 200 batches per turn, 20000 iterations,
  // 500 pretraining epochs.
  static TrainConfig full_scale_preset();

  // Throws UsageError describing the first violated constraint.
  void validate(std::size_t n_views, std::size_t n_samples) const;
  std::uint64_t view_seed(std::size_t view) const;
};

// One optimizer step of the fine-tuning phase.
struct IterationRecord {
  std::size_t iter = 0;
  std::size_t referred = 0;  // 1-based
  double total = 0.0;
  std::vector<double> reconstruction;
  std::vector<double> clustering;
  double consensus_rate = 0.0;  // last value measured at a turn boundary
};

struct TurnRecord {
  std::size_t turn = 0;
  std::size_t referred = 0;  // 1-based
  std::size_t first_iter = 0;
  std::size_t steps = 0;
  std::uint64_t target_checksum_start = 0;
  std::uint64_t target_checksum_end = 0;
  // L2 norm of each view's parameter change (network and centers) over the turn.
  std::vector<double> parameter_change;
  double consensus_rate = 0.0;
};

struct PretrainedViews {
  std::vector<Autoencoder> autoencoders;
  std::vector<std::vector<double>> loss_curves;
};

struct TrainState {
  TrainConfig config;
  std::vector<Autoencoder> autoencoders;
  std::vector<ClusterHead> heads;
  std::vector<AdamState> network_optimizers;
  std::vector<AdamState> center_optimizers;
  std::size_t current_referred = 1;  // 1-based, cycles 1..V
  std::size_t iter_count = 0;
  std::size_t turn_count = 0;
  // P of the referred view for the current turn; absent before the first turn.
  std::optional<TargetDistribution> shared_target;
  // Per-view self targets, used only by idec_per_view.
  std::vector<TargetDistribution> own_targets;
  std::vector<IterationRecord> loss_history;
  std::vector<TurnRecord> turns;
  // Centers right after initialization, before any fine-tuning.
  std::vector<Tensor> initial_centers;
  std::vector<std::vector<double>> pretrain_loss;
  double consensus = 0.0;
  std::size_t clamp_events = 0;

  // Shared shuffled sample stream: all views see the same rows in a step.
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::size_t epoch = 0;

  std::size_t n_views() const { return autoencoders.size(); }
};

struct BatchLoss {
  double total = 0.0;
  std::vector<double> reconstruction;
  std::vector<double> clustering;
};

struct ViewGradients {
  std::vector<Tensor> network;  // Autoencoder::parameters() order
  Tensor centers;
};

struct BatchGradients {
  BatchLoss loss;
  std::vector<ViewGradients> views;
  std::size_t clamped = 0;
};

// Pretrains every view's autoencoder on its own reconstruction loss.
PretrainedViews pretrain_views(const MultiViewDataset& data, const TrainConfig& config);

// Embeds the data, runs k-means and sets up cluster heads according to the
// mode. The state is ready for run_turn.
TrainState initialize(const MultiViewDataset& data, const TrainConfig& config,
                      PretrainedViews pretrained);

// Target each view is trained against in the current turn.
const TargetDistribution& target_for_view(const TrainState& state, std::size_t view);

// L = sum_v Lr_v + gamma * sum_v Lc_v on the given rows, with Lr_v the mean
// squared reconstruction error and Lc_v the batch-mean KL(P || Q_v).
BatchLoss total_loss(const TrainState& state, const MultiViewDataset& data,
                     std::span<const std::size_t> rows);
// Same loss plus exact gradients for every view's network and centers.
BatchGradients loss_gradients(TrainState& state, const MultiViewDataset& data,
                              std::span<const std::size_t> rows);

// Sets the turn's targets from the referred view, then runs up to
// batches_per_turn Adam steps (never past total_finetune_iters) and advances
// the referred view.
void run_turn(TrainState& state, const MultiViewDataset& data);

struct AssignmentReport {
  TrainMode mode = TrainMode::demvc;
  std::vector<SoftAssignment> per_view_soft;
  std::vector<Labels> per_view_hard;
  Labels fused_hard;
  double consensus_rate = 0.0;
  std::size_t iterations = 0;
  std::size_t turns = 0;
  std::optional<std::vector<ClusteringScores>> per_view_scores;
  std::optional<ClusteringScores> fused_scores;
};

std::vector<SoftAssignment> soft_assignments(const TrainState& state,
                                             const MultiViewDataset& data);
std::vector<Labels> predict_per_view(const TrainState& state, const MultiViewDataset& data);
Labels predict_fused(const TrainState& state, const MultiViewDataset& data);
double consensus_rate(const TrainState& state, const MultiViewDataset& data);

// argmax of the view-averaged soft assignments, lowest index on ties.
Labels fuse(std::span<const SoftAssignment> soft);
// Fraction of samples whose labels agree across all views.
double consensus_rate(std::span<const Labels> per_view);

AssignmentReport make_report(const TrainState& state, const MultiViewDataset& data);

struct FitResult {
  TrainState state;
  AssignmentReport report;
};

// Full pipeline. `pretrained` lets callers reuse a mode-independent
// pretraining across runs that share seed and architecture.
FitResult fit(const MultiViewDataset& data, const TrainConfig& config,
              const PretrainedViews* pretrained = nullptr);

}  // namespace demvc
