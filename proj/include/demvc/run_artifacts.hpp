#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "demvc/run_config.hpp"
#include "demvc/trainer.hpp"

namespace demvc {

// Run directory layout:
//   config.txt          key=value snapshot of the run
//   report.json         assignment report (labels, soft assignments, metrics)
//   loss_history.csv    iter,referred,L,Lr_1..Lr_V,Lc_1..Lc_V,consensus_rate
//   turns.csv           one row per turn with target checksums and parameter change
//   pretrain_loss.csv   epoch,view_1..view_V
//   view<v>.aecp        autoencoder and Adam state of view v
//   view<v>_centers.csv cluster centers of view v
//   embeddings.mvds     final embeddings of every view, range raw
nlohmann::json report_to_json(const AssignmentReport& report);

// Metric block for eval output: values x100 rounded to 2 decimals.
nlohmann::json scores_json_percent(const ClusteringScores& s);

void write_loss_history(const std::filesystem::path& path, const TrainState& state);
void write_turns(const std::filesystem::path& path, const TrainState& state);
void write_pretrain_loss(const std::filesystem::path& path, const TrainState& state);

// Embeddings of every view as an MVDS file; labels are copied from `data`.
MultiViewDataset embed_views(const TrainState& state, const MultiViewDataset& data);
MultiViewDataset embed_views(const std::vector<Autoencoder>& autoencoders,
                             const MultiViewDataset& data);

void write_run(const std::filesystem::path& dir, const RunConfig& config,
               const FitResult& result, const MultiViewDataset& data);

// Writes `text` to `path`, throwing Error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace demvc
