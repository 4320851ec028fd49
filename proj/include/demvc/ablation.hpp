#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "demvc/run_config.hpp"

namespace demvc {

struct AblationRun {
  TrainMode mode = TrainMode::demvc;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ClusteringScores fused;
  std::vector<ClusteringScores> per_view;
  double consensus_rate = 0.0;
  std::size_t iterations = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

struct AblationRow {
  TrainMode mode = TrainMode::demvc;
  std::size_t runs = 0;
  std::size_t failed = 0;
  MeanStd acc, nmi, ari, consensus_rate;
  std::vector<MeanStd> view_acc;
};

MeanStd mean_std(const std::vector<double>& xs);

using AblationProgress = std::function<void(const AblationRun&)>;

// Every mode in kAllModes for every seed in config.seeds. Pretraining depends
// only on the seed, so each seed pretrains once and all modes start from the
// same networks. A run that throws is recorded with ok = false.
std::vector<AblationRun> run_ablation(const MultiViewDataset& data, const RunConfig& config,
                                      const AblationProgress& progress = {});

// One row per mode in kAllModes order, from the successful runs.
std::vector<AblationRow> aggregate(const std::vector<AblationRun>& runs);

nlohmann::json run_to_json(const AblationRun& run);
nlohmann::json ablation_to_json(const std::vector<AblationRun>& runs,
                                const std::vector<AblationRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace demvc
