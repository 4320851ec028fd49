// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "demvc/tensor.hpp"

namespace oracle {

using demvc::Labels;
using demvc::Tensor;

// Accuracy of the best mapping from predicted clusters to classes, by
// enumerating every injective assignment.
inline double brute_force_acc(const Labels& truth, const Labels& pred) {
  const int k_true = *std::max_element(truth.begin(), truth.end()) + 1;
  const int k_pred = *std::max_element(pred.begin(), pred.end()) + 1;
  const int k = std::max(k_true, k_pred);
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (perm[static_cast<std::size_t>(pred[i])] == truth[i]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

// Global optimum of the two-cluster k-means objective over all 2^N labelings.
inline double brute_force_two_means(const Tensor& points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << n); ++mask) {
    double total = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> mean(d, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1U) != static_cast<std::uint64_t>(side)) continue;
        ++count;
        for (std::size_t t = 0; t < d; ++t) mean[t] += points.at(i, t);
      }
      for (double& m : mean) m /= static_cast<double>(count);
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1U) != static_cast<std::uint64_t>(side)) continue;
        for (std::size_t t = 0; t < d; ++t) {
          const double diff = points.at(i, t) - mean[t];
          total += diff * diff;
        }
      }
    }
    best = std::min(best, total);
  }
  return best;
}

// Central difference of f with respect to x[index].
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// Student-t memberships by the textbook formula.
inline Tensor student_t(const Tensor& z, const Tensor& mu) {
  Tensor q({z.rows(), mu.rows()});
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < mu.rows(); ++j) {
      double dist = 0.0;
      for (std::size_t t = 0; t < z.cols(); ++t) {
        const double diff = z.at(i, t) - mu.at(j, t);
        dist += diff * diff;
      }
      q.at(i, j) = 1.0 / (1.0 + dist);
      sum += q.at(i, j);
    }
    for (std::size_t j = 0; j < mu.rows(); ++j) q.at(i, j) /= sum;
  }
  return q;
}

inline Tensor sharpen(const Tensor& q) {
  Tensor p(q.shape());
  std::vector<double> f(q.cols(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < q.cols(); ++j) f[j] += q.at(i, j);
  }
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < q.cols(); ++j) {
      p.at(i, j) = q.at(i, j) * q.at(i, j) / f[j];
      sum += p.at(i, j);
    }
    for (std::size_t j = 0; j < q.cols(); ++j) p.at(i, j) /= sum;
  }
  return p;
}

inline double kl(const Tensor& p, const Tensor& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * std::log(p[i] / q[i]);
  }
  return total;
}

inline Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t({rows, cols});
  for (double& x : t.values()) x = u(rng);
  return t;
}

// Random row-stochastic matrix with strictly positive entries.
inline Tensor random_stochastic(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t = random_matrix(rows, cols, rng, 0.01, 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += t.at(i, j);
    for (std::size_t j = 0; j < cols; ++j) t.at(i, j) /= s;
  }
  return t;
}

inline Labels random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  Labels l(n);
  for (auto& x : l) x = u(rng);
  return l;
}

}  // namespace oracle
