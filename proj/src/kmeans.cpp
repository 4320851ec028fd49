#include "demvc/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "demvc/random.hpp"

namespace demvc {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t t = 0; t < d; ++t) {
    const double diff = a[t] - b[t];
    s += diff * diff;
  }
  return s;
}

Tensor plus_plus_seed(const Tensor& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Tensor centers({k, d});
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy_n(x.data() + first * d, d, centers.data());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = sq_dist(x.data() + i * d, centers.data(), d);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    std::copy_n(x.data() + chosen * d, d, centers.data() + c * d);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(x.data() + i * d, centers.data() + c * d, d));
    }
  }
  return centers;
}

// Assigns each point to its nearest center (lowest index on ties); returns
// the objective.
double assign(const Tensor& x, const Tensor& centers, Labels& labels) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = centers.rows();
  double objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::int32_t arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double dist = sq_dist(x.data() + i * d, centers.data() + j * d, d);
      if (dist < best) {
        best = dist;
        arg = static_cast<std::int32_t>(j);
      }
    }
    labels[i] = arg;
    objective += best;
  }
  return objective;
}

// Moves centers to the means of their points; returns the number of empty
// clusters that had to be reseeded.
std::size_t update(const Tensor& x, Tensor& centers, const Labels& labels) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = centers.rows();
  std::vector<std::size_t> counts(k, 0);
  centers.fill(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(labels[i]);
    ++counts[j];
    for (std::size_t t = 0; t < d; ++t) centers.at(j, t) += x.at(i, t);
  }
  std::vector<std::size_t> empty;
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) {
      empty.push_back(j);
      continue;
    }
    for (std::size_t t = 0; t < d; ++t) centers.at(j, t) /= static_cast<double>(counts[j]);
  }
  std::vector<bool> live(k);
  for (std::size_t j = 0; j < k; ++j) live[j] = counts[j] > 0;
  for (std::size_t j : empty) {
    // Farthest point from its nearest live center.
    double worst = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (live[c]) {
          nearest = std::min(nearest, sq_dist(x.data() + i * d, centers.data() + c * d, d));
        }
      }
      if (nearest > worst) {
        worst = nearest;
        arg = i;
      }
    }
    std::copy_n(x.data() + arg * d, d, centers.data() + j * d);
    live[j] = true;
  }
  return empty.size();
}

KMeansResult run_once(const Tensor& x, std::size_t k, std::uint64_t seed,
                      std::size_t max_iters) {
  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centers = plus_plus_seed(x, k, rng);
  r.labels.assign(x.rows(), 0);
  r.objective = assign(x, r.centers, r.labels);
  r.objective_history.push_back(r.objective);
  Labels previous;
  for (std::size_t it = 0; it < max_iters; ++it) {
    previous = r.labels;
    r.reseeds += update(x, r.centers, r.labels);
    r.objective = assign(x, r.centers, r.labels);
    r.objective_history.push_back(r.objective);
    ++r.iterations;
    if (r.labels == previous) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace

KMeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (points.rank() != 2 || points.cols() == 0) {
    throw DimensionError("k-means expects an (N, d) matrix, got " +
                         shape_string(points.shape()));
  }
  if (k < 1) throw UsageError("k-means needs K >= 1");
  if (points.rows() < k) {
    throw UsageError("k-means needs N >= K (N = " + std::to_string(points.rows()) +
                     ", K = " + std::to_string(k) + ")");
  }
  KMeansResult best;
  bool have = false;
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    KMeansResult run = run_once(points, k, derive_seed(seed, {0x4B4D, r}), options.max_iters);
    if (!have || run.objective < best.objective) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

double kmeans_objective(const Tensor& points, const Tensor& centers, const Labels& labels) {
  const std::size_t d = points.cols();
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    s += sq_dist(points.data() + i * d, centers.data() + static_cast<std::size_t>(labels[i]) * d, d);
  }
  return s;
}

}  // namespace demvc
