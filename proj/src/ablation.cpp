#include "demvc/ablation.hpp"

#include <cmath>
#include <sstream>

namespace demvc {

namespace {

nlohmann::json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

nlohmann::json scores_json(const ClusteringScores& s) {
  return {{"acc", s.acc}, {"nmi", s.nmi}, {"ari", s.ari}};
}

}  // namespace

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::vector<AblationRun> run_ablation(const MultiViewDataset& data, const RunConfig& config,
                                      const AblationProgress& progress) {
  if (!data.has_labels()) throw UsageError("ablation needs a labeled dataset");
  config.validate(data.n_views(), data.n_samples());
  std::vector<AblationRun> runs;
  for (std::uint64_t seed : config.seeds) {
    TrainConfig base = config.train;
    base.seed = seed;
    std::optional<PretrainedViews> pretrained;
    std::string pretrain_error;
    try {
      pretrained = pretrain_views(data, base);
    } catch (const Error& e) {
      pretrain_error = e.what();
    }
    for (TrainMode mode : kAllModes) {
      AblationRun run;
      run.mode = mode;
      run.seed = seed;
      if (!pretrained) {
        run.error = "pretraining failed: " + pretrain_error;
      } else {
        try {
          TrainConfig tc = base;
          tc.mode = mode;
          const FitResult fit_result = fit(data, tc, &*pretrained);
          run.ok = true;
          run.fused = *fit_result.report.fused_scores;
          run.per_view = *fit_result.report.per_view_scores;
          run.consensus_rate = fit_result.report.consensus_rate;
          run.iterations = fit_result.report.iterations;
        } catch (const Error& e) {
          run.error = e.what();
        }
      }
      if (progress) progress(run);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

std::vector<AblationRow> aggregate(const std::vector<AblationRun>& runs) {
  std::vector<AblationRow> rows;
  for (TrainMode mode : kAllModes) {
    AblationRow row;
    row.mode = mode;
    std::vector<double> acc, nmi, ari, cons;
    std::vector<std::vector<double>> view_acc;
    for (const auto& r : runs) {
      if (r.mode != mode) continue;
      if (!r.ok) {
        ++row.failed;
        continue;
      }
      ++row.runs;
      acc.push_back(r.fused.acc);
      nmi.push_back(r.fused.nmi);
      ari.push_back(r.fused.ari);
      cons.push_back(r.consensus_rate);
      view_acc.resize(std::max(view_acc.size(), r.per_view.size()));
      for (std::size_t v = 0; v < r.per_view.size(); ++v) view_acc[v].push_back(r.per_view[v].acc);
    }
    row.acc = mean_std(acc);
    row.nmi = mean_std(nmi);
    row.ari = mean_std(ari);
    row.consensus_rate = mean_std(cons);
    for (const auto& xs : view_acc) row.view_acc.push_back(mean_std(xs));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json run_to_json(const AblationRun& run) {
  nlohmann::json j;
  j["mode"] = to_string(run.mode);
  j["seed"] = run.seed;
  j["ok"] = run.ok;
  if (!run.ok) {
    j["error"] = run.error;
    return j;
  }
  j["fused"] = scores_json(run.fused);
  j["views"] = nlohmann::json::array();
  for (const auto& s : run.per_view) j["views"].push_back(scores_json(s));
  j["consensus_rate"] = run.consensus_rate;
  j["iterations"] = run.iterations;
  return j;
}

nlohmann::json ablation_to_json(const std::vector<AblationRun>& runs,
                                const std::vector<AblationRow>& rows) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) j["runs"].push_back(run_to_json(r));
  j["modes"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json m;
    m["mode"] = to_string(row.mode);
    m["runs"] = row.runs;
    m["failed"] = row.failed;
    m["acc"] = mean_std_json(row.acc);
    m["nmi"] = mean_std_json(row.nmi);
    m["ari"] = mean_std_json(row.ari);
    m["consensus_rate"] = mean_std_json(row.consensus_rate);
    m["view_acc"] = nlohmann::json::array();
    for (const auto& v : row.view_acc) m["view_acc"].push_back(mean_std_json(v));
    j["modes"].push_back(std::move(m));
  }
  return j;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::size_t n_views = 0;
  for (const auto& r : rows) n_views = std::max(n_views, r.view_acc.size());
  std::ostringstream out;
  out.precision(17);
  out << "mode,runs,failed,acc_mean,acc_std,nmi_mean,nmi_std,ari_mean,ari_std,"
         "consensus_mean,consensus_std";
  for (std::size_t v = 1; v <= n_views; ++v) out << ",view" << v << "_acc_mean,view" << v << "_acc_std";
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << r.runs << ',' << r.failed << ',' << r.acc.mean << ','
        << r.acc.std << ',' << r.nmi.mean << ',' << r.nmi.std << ',' << r.ari.mean << ','
        << r.ari.std << ',' << r.consensus_rate.mean << ',' << r.consensus_rate.std;
    for (std::size_t v = 0; v < n_views; ++v) {
      if (v < r.view_acc.size()) {
        out << ',' << r.view_acc[v].mean << ',' << r.view_acc[v].std;
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace demvc
