#include "demvc/cluster_head.hpp"

#include <algorithm>
#include <cmath>

namespace demvc {

namespace {

void validate_centers(const Tensor& centers) {
  if (centers.rank() != 2 || centers.rows() < 2 || centers.cols() == 0) {
    throw UsageError("cluster centers must be (K, d) with K >= 2, got " +
                     shape_string(centers.shape()));
  }
  if (!centers.all_finite()) throw UsageError("cluster centers contain non-finite values");
  for (std::size_t a = 0; a < centers.rows(); ++a) {
    for (std::size_t b = a + 1; b < centers.rows(); ++b) {
      if (std::ranges::equal(centers.row(a), centers.row(b))) {
        throw UsageError("cluster centers " + std::to_string(a) + " and " +
                         std::to_string(b) + " coincide");
      }
    }
  }
}

void check_embeddings(const ClusterHead& head, const Tensor& z) {
  if (z.rank() != 2 || z.cols() != head.dim()) {
    throw DimensionError("embeddings " + shape_string(z.shape()) +
                         " do not match cluster dimension " + std::to_string(head.dim()));
  }
}

// Student-t kernel values w_ij = 1 / (1 + |z_i - mu_j|^2).
Tensor kernel_weights(const ClusterHead& head, const Tensor& z) {
  const std::size_t n = z.rows();
  const std::size_t k = head.n_clusters();
  const std::size_t d = head.dim();
  Tensor w({n, k});
  const Tensor& mu = head.centers();
#pragma omp parallel for schedule(static) if (n * k * d > 65536)
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = z.data() + i * d;
    for (std::size_t j = 0; j < k; ++j) {
      const double* mj = mu.data() + j * d;
      double dist = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = zi[c] - mj[c];
        dist += diff * diff;
      }
      w.at(i, j) = 1.0 / (1.0 + dist);
    }
  }
  return w;
}

SoftAssignment normalize_rows(Tensor w) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    auto r = w.row(i);
    double s = 0.0;
    for (double v : r) s += v;
    for (double& v : r) v /= s;
  }
  return {std::move(w)};
}

}  // namespace

ClusterHead::ClusterHead(Tensor centers) : centers_(std::move(centers)) {
  validate_centers(centers_);
}

void ClusterHead::set_centers(const Tensor& centers) {
  if (!centers_.empty()) require_same_shape(centers_, centers, "cluster centers");
  validate_centers(centers);
  centers_ = centers;
}

SoftAssignment soft_assign(const ClusterHead& head, const Tensor& embeddings) {
  check_embeddings(head, embeddings);
  return normalize_rows(kernel_weights(head, embeddings));
}

TargetDistribution target_distribution(const SoftAssignment& q) {
  const Tensor& qv = q.values;
  if (qv.rank() != 2 || qv.rows() == 0) {
    throw DimensionError("soft assignment must be a non-empty (N, K) matrix");
  }
  const std::size_t n = qv.rows();
  const std::size_t k = qv.cols();
  std::vector<double> freq(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) freq[j] += qv.at(i, j);
  }
  for (double& f : freq) f = std::max(f, kLogClamp);

  Tensor p({n, k});
  std::vector<double> num(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) num[j] = qv.at(i, j) * qv.at(i, j) / freq[j];
    // p_ij = 1 / sum_j' (num_ij' / num_ij): same value as num_ij / sum_j' num_ij',
    // but equal numerators give exactly 1/K and one-hot rows stay exact.
    for (std::size_t j = 0; j < k; ++j) {
      if (num[j] == 0.0) {
        p.at(i, j) = 0.0;
        continue;
      }
      double ratio_sum = 0.0;
      for (std::size_t l = 0; l < k; ++l) ratio_sum += num[l] / num[j];
      p.at(i, j) = std::isfinite(ratio_sum) ? 1.0 / ratio_sum : 0.0;
    }
  }
  return {std::move(p)};
}

KlValue kl_divergence(const TargetDistribution& p, const SoftAssignment& q) {
  require_same_shape(p.values, q.values, "KL divergence");
  KlValue out;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double pv = p.values[i];
    if (pv <= 0.0) continue;
    double qv = q.values[i];
    if (qv < kLogClamp) {
      qv = kLogClamp;
      ++out.clamped;
    }
    out.value += pv * std::log(pv / qv);
  }
  return out;
}

double kl_loss(const TargetDistribution& p, const SoftAssignment& q) {
  return kl_divergence(p, q).value;
}

ClusteringGrads clustering_backward(const ClusterHead& head, const Tensor& embeddings,
                                    const TargetDistribution& p) {
  check_embeddings(head, embeddings);
  const std::size_t n = embeddings.rows();
  const std::size_t k = head.n_clusters();
  const std::size_t d = head.dim();
  if (p.values.rank() != 2 || p.values.rows() != n || p.values.cols() != k) {
    throw DimensionError("target " + shape_string(p.values.shape()) + " does not match " +
                         shape_string({n, k}));
  }
  const Tensor w = kernel_weights(head, embeddings);
  ClusteringGrads g;
  g.q = normalize_rows(w);
  const KlValue kl = kl_divergence(p, g.q);
  g.loss = kl.value;
  g.clamped = kl.clamped;

  // coeff_ij = 2 w_ij (p_ij - s_i q_ij), s_i = sum_j p_ij; then
  // dL/dz_i = sum_j coeff_ij (z_i - mu_j) and dL/dmu_j = -sum_i coeff_ij (z_i - mu_j).
  Tensor coeff({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += p.values.at(i, j);
    for (std::size_t j = 0; j < k; ++j) {
      coeff.at(i, j) = 2.0 * w.at(i, j) * (p.values.at(i, j) - s * g.q.values.at(i, j));
    }
  }
  const Tensor& mu = head.centers();
  g.embeddings = Tensor({n, d});
  g.centers = Tensor({k, d});
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = embeddings.data() + i * d;
    double* gz = g.embeddings.data() + i * d;
    for (std::size_t j = 0; j < k; ++j) {
      const double c = coeff.at(i, j);
      const double* mj = mu.data() + j * d;
      for (std::size_t t = 0; t < d; ++t) gz[t] += c * (zi[t] - mj[t]);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double* mj = mu.data() + j * d;
    double* gm = g.centers.data() + j * d;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = coeff.at(i, j);
      const double* zi = embeddings.data() + i * d;
      for (std::size_t t = 0; t < d; ++t) gm[t] -= c * (zi[t] - mj[t]);
    }
  }
  return g;
}

void init_shared_centers(std::span<ClusterHead> heads, const Tensor& referred_centers) {
  for (auto& h : heads) {
    if (!h.centers().empty() && h.centers().shape() != referred_centers.shape()) {
      throw DimensionError("shared centers " + shape_string(referred_centers.shape()) +
                           " do not match head " + shape_string(h.centers().shape()));
    }
  }
  for (auto& h : heads) h = ClusterHead(referred_centers);
}

Labels hard_labels(const Tensor& soft) {
  Labels out(soft.rows());
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    auto r = soft.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<std::int32_t>(best);
  }
  return out;
}

}  // namespace demvc
