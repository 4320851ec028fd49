#include "demvc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "demvc/random.hpp"

namespace demvc {

namespace {

const ImageShape& require_image(const ViewData& v, const char* what) {
  if (!v.image) throw UsageError(std::string(what) + " needs a view with an image shape");
  return *v.image;
}

// Draws, for every row, a sample index with the same label.
std::vector<std::size_t> same_label_partners(const Labels& labels, std::uint64_t seed) {
  std::map<std::int32_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  std::vector<std::size_t> partner(labels.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& pool = by_label[labels[i]];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    partner[i] = pool[pick(rng)];
  }
  return partner;
}

}  // namespace

MultiViewDataset make_paired_views(const MultiViewDataset& base, std::size_t n_views,
                                   std::uint64_t seed) {
  if (!base.has_labels()) throw UsageError("paired views need a labeled base dataset");
  if (n_views == 0) throw UsageError("paired views need n_views >= 1");
  std::vector<ViewData> views{base.view(0)};
  for (std::size_t v = 1; v < n_views; ++v) {
    const auto partner = same_label_partners(*base.labels(), derive_seed(seed, {0x5041, v}));
    ViewData vd = base.view(0);
    vd.features = gather_rows(base.features(0), partner);
    views.push_back(std::move(vd));
  }
  return MultiViewDataset(std::move(views), base.labels());
}

ViewData make_noisy_view(const ViewData& images, std::uint64_t seed) {
  require_image(images, "noisy view");
  if (images.range != ValueRange::unit) throw UsageError("noisy view expects [0, 1] inputs");
  ViewData out = images;
  const std::size_t n = images.features.rows();
  const std::size_t d = images.features.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, {0x4E4F, i}));
    std::uniform_real_distribution<double> noise(0.0, 255.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double pixel = images.features.at(i, j) * 255.0 + noise(rng);
      out.features.at(i, j) = std::clamp(pixel, 0.0, 255.0) / 255.0;
    }
  }
  quantize_to_storage(out.features);
  return out;
}

std::vector<double> rotate_image(std::span<const double> image, const ImageShape& shape,
                                 double angle) {
  const std::size_t h = shape.height;
  const std::size_t w = shape.width;
  const std::size_t plane = h * w;
  std::vector<double> out(image.size(), 0.0);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t ch = 0; ch < shape.channels; ++ch) {
    const double* src = image.data() + ch * plane;
    double* dst = out.data() + ch * plane;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        // Inverse map: rotate the output coordinate back by -angle.
        const double sx = c * dx + s * dy + cx;
        const double sy = -s * dx + c * dy + cy;
        const double fx = std::floor(sx);
        const double fy = std::floor(sy);
        const double ax = sx - fx;
        const double ay = sy - fy;
        auto sample = [&](double yy, double xx) {
          if (yy < 0.0 || xx < 0.0 || yy > static_cast<double>(h - 1) ||
              xx > static_cast<double>(w - 1)) {
            return 0.0;
          }
          return src[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
        };
        double v = 0.0;
        if (ay < 1.0 && ax < 1.0) v += (1.0 - ay) * (1.0 - ax) * sample(fy, fx);
        if (ax > 0.0) v += (1.0 - ay) * ax * sample(fy, fx + 1.0);
        if (ay > 0.0) v += ay * (1.0 - ax) * sample(fy + 1.0, fx);
        if (ax > 0.0 && ay > 0.0) v += ay * ax * sample(fy + 1.0, fx + 1.0);
        dst[y * w + x] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

ViewData make_rotated_view(const ViewData& images, std::uint64_t seed,
                           std::optional<double> fixed_angle) {
  const ImageShape& shape = require_image(images, "rotated view");
  if (shape.height != shape.width) {
    throw UsageError("rotated view needs square images, got " + std::to_string(shape.height) +
                     "x" + std::to_string(shape.width));
  }
  ViewData out = images;
  const std::size_t n = images.features.rows();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    double angle = 0.0;
    if (fixed_angle) {
      angle = *fixed_angle;
    } else {
      std::mt19937_64 rng(derive_seed(seed, {0x524F, i}));
      std::uniform_real_distribution<double> dist(-std::numbers::pi / 4.0, std::numbers::pi / 4.0);
      angle = dist(rng);
    }
    const auto rotated = rotate_image(images.features.row(i), shape, angle);
    std::ranges::copy(rotated, out.features.row(i).begin());
  }
  quantize_to_storage(out.features);
  return out;
}

MultiViewDataset make_noisy_rotating(const MultiViewDataset& base, std::uint64_t seed,
                                     NoiseSource source) {
  if (!base.has_labels()) throw UsageError("noisy/rotating views need a labeled base dataset");
  const ViewData& images = base.view(0);
  ViewData rotated = make_rotated_view(images, derive_seed(seed, {1}));
  const auto partner = same_label_partners(*base.labels(), derive_seed(seed, {2}));
  ViewData partner_view = images;
  partner_view.features =
      gather_rows(source == NoiseSource::paired_clean ? images.features : rotated.features,
                  partner);
  if (source == NoiseSource::rotated) {
    // Re-rotate so the noised image is not the same rotation as its partner row.
    partner_view = make_rotated_view(partner_view, derive_seed(seed, {4}));
  }
  ViewData noisy = make_noisy_view(partner_view, derive_seed(seed, {3}));
  return MultiViewDataset({std::move(noisy), std::move(rotated)}, base.labels());
}

GaussianMultiview make_gaussian_multiview(const GaussianMultiviewSpec& spec) {
  if (spec.n_per_class == 0 || spec.n_clusters == 0 || spec.latent_dim == 0 ||
      spec.view_dims.empty()) {
    throw UsageError("gaussian multiview sizes must all be at least 1");
  }
  for (std::size_t d : spec.view_dims) {
    if (d == 0) throw UsageError("view dimensions must be at least 1");
  }
  const std::size_t k = spec.n_clusters;
  const std::size_t ld = spec.latent_dim;
  const std::size_t n = k * spec.n_per_class;

  // Class means on a circle (a line in one dimension) with adjacent chord
  // equal to the separation; all other pairs are farther apart.
  Tensor means({k, ld});
  if (ld == 1 || k <= 2) {
    for (std::size_t c = 0; c < k; ++c) means.at(c, 0) = spec.separation * static_cast<double>(c);
  } else {
    const double radius = spec.separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(k)));
    for (std::size_t c = 0; c < k; ++c) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
      means.at(c, 0) = radius * std::cos(a);
      means.at(c, 1) = radius * std::sin(a);
    }
  }

  std::mt19937_64 rng(derive_seed(spec.seed, {0x4C41}));
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianMultiview out;
  out.latent = Tensor({n, ld});
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / spec.n_per_class;
    labels[i] = static_cast<std::int32_t>(c);
    for (std::size_t t = 0; t < ld; ++t) out.latent.at(i, t) = means.at(c, t) + normal(rng);
  }

  // Nuisance modes: K points on a circle, spaced `nuisance` times wider than
  // the classes, drawn independently of the class.
  Tensor nuisance_means({k, ld});
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t t = 0; t < ld; ++t) nuisance_means.at(c, t) = means.at(c, t) * spec.nuisance;
  }

  std::vector<ViewData> views;
  for (std::size_t v = 0; v < spec.view_dims.size(); ++v) {
    std::mt19937_64 vrng(derive_seed(spec.seed, {0x5649, v}));
    const bool nuisance = v > 0 && spec.nuisance > 0.0;
    const std::size_t in_dim = nuisance ? 2 * ld : ld;
    const std::size_t dim = spec.view_dims[v];
    Tensor weights({dim, in_dim});
    Tensor bias({dim});
    const double spread = nuisance ? spec.separation * std::max(1.0, spec.nuisance) : spec.separation;
    const double scale = 2.0 / (spread * std::sqrt(static_cast<double>(in_dim)));
    for (double& w : weights.values()) w = normal(vrng) * scale;
    for (double& b : bias.values()) b = 0.5 * normal(vrng);

    ViewData vd;
    vd.features = Tensor({n, dim});
    std::vector<double> u(in_dim);
    std::uniform_int_distribution<std::size_t> mode(0, k - 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < ld; ++t) u[t] = out.latent.at(i, t);
      if (nuisance) {
        const std::size_t m = mode(vrng);
        for (std::size_t t = 0; t < ld; ++t) u[ld + t] = nuisance_means.at(m, t) + normal(vrng);
      }
      for (std::size_t j = 0; j < dim; ++j) {
        double pre = bias[j];
        for (std::size_t t = 0; t < in_dim; ++t) pre += weights.at(j, t) * u[t];
        vd.features.at(i, j) = 1.0 / (1.0 + std::exp(-pre));
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      double lo = vd.features.at(0, j);
      double hi = lo;
      for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, vd.features.at(i, j));
        hi = std::max(hi, vd.features.at(i, j));
      }
      const double span = hi > lo ? hi - lo : 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        vd.features.at(i, j) = std::clamp((vd.features.at(i, j) - lo) / span, 0.0, 1.0);
      }
    }
    quantize_to_storage(vd.features);
    views.push_back(std::move(vd));
  }
  out.dataset = MultiViewDataset(std::move(views), std::move(labels));
  return out;
}

}  // namespace demvc
