#pragma once

#include <cstdint>
#include <vector>

#include "demvc/tensor.hpp"

namespace demvc {

struct KMeansOptions {
  std::size_t max_iters = 300;
  // Independent k-means++ seedings; the lowest final objective wins.
  std::size_t restarts = 1;
};

struct KMeansResult {
  Tensor centers;  // (K, d)
  Labels labels;
  double objective = 0.0;
  // Objective after every assignment step of the winning restart.
  std::vector<double> objective_history;
  std::size_t iterations = 0;
  std::size_t reseeds = 0;
  bool converged = false;
};

// Lloyd's algorithm from k-means++ seeding. Stops at an assignment fixpoint
// or after max_iters updates. A cluster that loses all points is reseeded at
// the point farthest from its nearest center.
KMeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Sum of squared distances from each point to its labeled center.
double kmeans_objective(const Tensor& points, const Tensor& centers, const Labels& labels);

}  // namespace demvc
