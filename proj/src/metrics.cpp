#include "demvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace demvc {

void LabeledPartition::validate() const {
  if (true_labels.empty()) throw UsageError("partition has no samples");
  if (true_labels.size() != pred_labels.size()) {
    throw UsageError("partition lengths differ: " + std::to_string(true_labels.size()) +
                     " true vs " + std::to_string(pred_labels.size()) + " predicted");
  }
  for (auto v : true_labels) {
    if (v < 0) throw UsageError("negative true label");
  }
  for (auto v : pred_labels) {
    if (v < 0) throw UsageError("negative predicted label");
  }
}

std::vector<std::vector<std::size_t>> contingency_table(const LabeledPartition& p) {
  p.validate();
  const auto n_true = static_cast<std::size_t>(*std::ranges::max_element(p.true_labels)) + 1;
  const auto n_pred = static_cast<std::size_t>(*std::ranges::max_element(p.pred_labels)) + 1;
  std::vector<std::vector<std::size_t>> table(n_true, std::vector<std::size_t>(n_pred, 0));
  for (std::size_t i = 0; i < p.true_labels.size(); ++i) {
    ++table[static_cast<std::size_t>(p.true_labels[i])][static_cast<std::size_t>(p.pred_labels[i])];
  }
  return table;
}

std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
  const std::size_t n = weight.size();
  if (n == 0) return {};
  double top = 0.0;
  for (const auto& row : weight) {
    if (row.size() != n) throw DimensionError("assignment matrix must be square");
    for (double w : row) top = std::max(top, w);
  }
  // Kuhn-Munkres with potentials on cost = top - weight (1-based internals).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - weight[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n);
  for (std::size_t j = 1; j <= n; ++j) col_of_row[match[j] - 1] = j - 1;
  return col_of_row;
}

double acc(const LabeledPartition& p) {
  const auto table = contingency_table(p);
  const std::size_t size = std::max(table.size(), table.front().size());
  std::vector<std::vector<double>> w(size, std::vector<double>(size, 0.0));
  for (std::size_t t = 0; t < table.size(); ++t) {
    for (std::size_t c = 0; c < table[t].size(); ++c) w[c][t] = static_cast<double>(table[t][c]);
  }
  const auto match = max_weight_assignment(w);
  double hits = 0.0;
  for (std::size_t c = 0; c < size; ++c) hits += w[c][match[c]];
  return hits / static_cast<double>(p.true_labels.size());
}

double nmi(const LabeledPartition& p) {
  const auto table = contingency_table(p);
  const double n = static_cast<double>(p.true_labels.size());
  std::vector<double> row_sum(table.size(), 0.0);
  std::vector<double> col_sum(table.front().size(), 0.0);
  for (std::size_t t = 0; t < table.size(); ++t) {
    for (std::size_t c = 0; c < table[t].size(); ++c) {
      row_sum[t] += static_cast<double>(table[t][c]);
      col_sum[c] += static_cast<double>(table[t][c]);
    }
  }
  auto entropy = [n](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    }
    return h;
  };
  const double h_true = entropy(row_sum);
  const double h_pred = entropy(col_sum);
  if (h_true == 0.0 && h_pred == 0.0) return 1.0;
  if (h_true == 0.0 || h_pred == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t t = 0; t < table.size(); ++t) {
    for (std::size_t c = 0; c < table[t].size(); ++c) {
      const double nij = static_cast<double>(table[t][c]);
      if (nij == 0.0) continue;
      mi += (nij / n) * std::log(n * nij / (row_sum[t] * col_sum[c]));
    }
  }
  return std::clamp(mi / std::sqrt(h_true * h_pred), 0.0, 1.0);
}

double ari(const LabeledPartition& p) {
  const auto table = contingency_table(p);
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  const double n = static_cast<double>(p.true_labels.size());
  double index = 0.0;
  std::vector<double> row_sum(table.size(), 0.0);
  std::vector<double> col_sum(table.front().size(), 0.0);
  for (std::size_t t = 0; t < table.size(); ++t) {
    for (std::size_t c = 0; c < table[t].size(); ++c) {
      const double nij = static_cast<double>(table[t][c]);
      index += pairs(nij);
      row_sum[t] += nij;
      col_sum[c] += nij;
    }
  }
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  for (double a : row_sum) sum_rows += pairs(a);
  for (double b : col_sum) sum_cols += pairs(b);
  const double total = pairs(n);
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

ClusteringScores evaluate(const Labels& truth, const Labels& pred) {
  LabeledPartition p{truth, pred};
  return {acc(p), nmi(p), ari(p)};
}

}  // namespace demvc
