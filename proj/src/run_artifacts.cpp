#include "demvc/run_artifacts.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "demvc/checkpoint.hpp"
#include "demvc/mvds.hpp"

namespace demvc {

namespace {

nlohmann::json scores_json(const ClusteringScores& s) {
  return {{"acc", s.acc}, {"nmi", s.nmi}, {"ari", s.ari}};
}

nlohmann::json matrix_json(const Tensor& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const auto r = t.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

std::string csv_double(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

double round_percent(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

}  // namespace

nlohmann::json report_to_json(const AssignmentReport& report) {
  nlohmann::json j;
  j["mode"] = to_string(report.mode);
  j["iterations"] = report.iterations;
  j["turns"] = report.turns;
  j["n_views"] = report.per_view_hard.size();
  j["n_samples"] = report.fused_hard.size();
  j["consensus_rate"] = report.consensus_rate;
  j["fused"] = {{"labels", report.fused_hard}};
  if (report.fused_scores) j["fused"]["metrics"] = scores_json(*report.fused_scores);
  j["views"] = nlohmann::json::array();
  for (std::size_t v = 0; v < report.per_view_hard.size(); ++v) {
    nlohmann::json view;
    view["view"] = v + 1;
    view["labels"] = report.per_view_hard[v];
    view["soft"] = matrix_json(report.per_view_soft[v].values);
    if (report.per_view_scores) view["metrics"] = scores_json((*report.per_view_scores)[v]);
    j["views"].push_back(std::move(view));
  }
  return j;
}

nlohmann::json scores_json_percent(const ClusteringScores& s) {
  return {{"acc", round_percent(s.acc)}, {"nmi", round_percent(s.nmi)},
          {"ari", round_percent(s.ari)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

void write_loss_history(const std::filesystem::path& path, const TrainState& state) {
  const std::size_t n_views = state.n_views();
  std::ostringstream out;
  out << "iter,referred,L";
  for (std::size_t v = 1; v <= n_views; ++v) out << ",Lr_" << v;
  for (std::size_t v = 1; v <= n_views; ++v) out << ",Lc_" << v;
  out << ",consensus_rate\n";
  for (const auto& r : state.loss_history) {
    out << r.iter << ',' << r.referred << ',' << csv_double(r.total);
    for (double x : r.reconstruction) out << ',' << csv_double(x);
    for (double x : r.clustering) out << ',' << csv_double(x);
    out << ',' << csv_double(r.consensus_rate) << '\n';
  }
  write_text(path, out.str());
}

void write_turns(const std::filesystem::path& path, const TrainState& state) {
  std::ostringstream out;
  out << "turn,referred,first_iter,steps,target_checksum_start,target_checksum_end";
  for (std::size_t v = 1; v <= state.n_views(); ++v) out << ",change_" << v;
  out << ",consensus_rate\n";
  for (const auto& t : state.turns) {
    out << t.turn << ',' << t.referred << ',' << t.first_iter << ',' << t.steps << ','
        << t.target_checksum_start << ',' << t.target_checksum_end;
    for (double x : t.parameter_change) out << ',' << csv_double(x);
    out << ',' << csv_double(t.consensus_rate) << '\n';
  }
  write_text(path, out.str());
}

void write_pretrain_loss(const std::filesystem::path& path, const TrainState& state) {
  std::ostringstream out;
  out << "epoch";
  for (std::size_t v = 1; v <= state.pretrain_loss.size(); ++v) out << ",view_" << v;
  out << '\n';
  const std::size_t epochs = state.pretrain_loss.empty() ? 0 : state.pretrain_loss.front().size();
  for (std::size_t e = 0; e < epochs; ++e) {
    out << e;
    for (const auto& curve : state.pretrain_loss) out << ',' << csv_double(curve.at(e));
    out << '\n';
  }
  write_text(path, out.str());
}

MultiViewDataset embed_views(const std::vector<Autoencoder>& autoencoders,
                             const MultiViewDataset& data) {
  if (autoencoders.size() != data.n_views()) {
    throw DimensionError("have " + std::to_string(autoencoders.size()) +
                         " autoencoders for " + std::to_string(data.n_views()) + " views");
  }
  std::vector<ViewData> views;
  for (std::size_t v = 0; v < data.n_views(); ++v) {
    ViewData vd;
    vd.features = autoencoders[v].encode(data.features(v));
    vd.range = ValueRange::raw;
    quantize_to_storage(vd.features);
    views.push_back(std::move(vd));
  }
  return MultiViewDataset(std::move(views), data.labels());
}

MultiViewDataset embed_views(const TrainState& state, const MultiViewDataset& data) {
  return embed_views(state.autoencoders, data);
}

void write_run(const std::filesystem::path& dir, const RunConfig& config,
               const FitResult& result, const MultiViewDataset& data) {
  std::filesystem::create_directories(dir);
  const TrainState& state = result.state;
  write_text(dir / "config.txt", config.to_text());
  write_text(dir / "report.json", report_to_json(result.report).dump(1) + "\n");
  write_loss_history(dir / "loss_history.csv", state);
  write_turns(dir / "turns.csv", state);
  write_pretrain_loss(dir / "pretrain_loss.csv", state);
  for (std::size_t v = 0; v < state.n_views(); ++v) {
    const std::string stem = "view" + std::to_string(v + 1);
    save_checkpoint(dir / (stem + ".aecp"), state.autoencoders[v],
                    &state.network_optimizers[v]);
    write_csv_matrix(dir / (stem + "_centers.csv"), state.heads[v].centers());
  }
  if (config.dump_embeddings) save_mvds(dir / "embeddings.mvds", embed_views(state, data));
}

}  // namespace demvc
