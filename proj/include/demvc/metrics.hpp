#pragma once

#include <vector>

#include "demvc/tensor.hpp"

namespace demvc {

// Ground truth and predicted labels for the same samples.
struct LabeledPartition {
  Labels true_labels;
  Labels pred_labels;

  // Throws UsageError unless lengths match, are non-zero, and labels are >= 0.
  void validate() const;
};

// counts[t][p] = number of samples with true label t and predicted label p.
std::vector<std::vector<std::size_t>> contingency_table(const LabeledPartition& p);

// Optimal assignment maximizing total weight on a square matrix.
// Returns col_of_row.
std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<double>>& weight);

// Best one-to-one cluster-to-class matching accuracy.
double acc(const LabeledPartition& p);
// Mutual information normalized by the geometric mean of the entropies.
double nmi(const LabeledPartition& p);
double ari(const LabeledPartition& p);

struct ClusteringScores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

ClusteringScores evaluate(const Labels& truth, const Labels& pred);

}  // namespace demvc
