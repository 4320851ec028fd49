#pragma once

#include <span>

#include "demvc/tensor.hpp"

namespace demvc {

// Cluster centers of one view's embedded space, shape (K, d) with K >= 2.
class ClusterHead {
 public:
  ClusterHead() = default;
  explicit ClusterHead(Tensor centers);

  std::size_t n_clusters() const { return centers_.rows(); }
  std::size_t dim() const { return centers_.cols(); }
  const Tensor& centers() const { return centers_; }
  Tensor& centers() { return centers_; }
  void set_centers(const Tensor& centers);

 private:
  Tensor centers_;
};

// Student-t (one degree of freedom) membership of each sample in each
// cluster; rows sum to one.
struct SoftAssignment {
  Tensor values;
};

// Sharpened self-training target. Held constant during differentiation.
struct TargetDistribution {
  Tensor values;
};

// Clamp applied to q inside logarithms.
inline constexpr double kLogClamp = 1e-12;

SoftAssignment soft_assign(const ClusterHead& head, const Tensor& embeddings);

// p_ij proportional to q_ij^2 / f_j with f_j the column sum of Q.
TargetDistribution target_distribution(const SoftAssignment& q);

struct KlValue {
  double value = 0.0;
  // Entries where q fell below kLogClamp while p was positive.
  std::size_t clamped = 0;
};

// Sum over rows and clusters of p log(p / q), with 0 log 0 = 0.
KlValue kl_divergence(const TargetDistribution& p, const SoftAssignment& q);
double kl_loss(const TargetDistribution& p, const SoftAssignment& q);

struct ClusteringGrads {
  double loss = 0.0;
  std::size_t clamped = 0;
  SoftAssignment q;
  Tensor embeddings;  // d loss / d Z, shape (N, d)
  Tensor centers;     // d loss / d mu, shape (K, d)
};

// Gradients of kl_loss(p, soft_assign(head, Z)) with respect to Z and the
// centers; p is treated as a constant.
ClusteringGrads clustering_backward(const ClusterHead& head, const Tensor& embeddings,
                                    const TargetDistribution& p);

// Copies `referred_centers` into every head.
void init_shared_centers(std::span<ClusterHead> heads, const Tensor& referred_centers);

// argmax per row with ties broken by the lowest index.
Labels hard_labels(const Tensor& soft);

}  // namespace demvc
