#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "demvc/dataset.hpp"

namespace demvc {

// Builds `n_views` views from view 1 of a labeled base: view 1 is copied and
// row i of every further view is a uniformly drawn base sample carrying row
// i's label (possibly row i itself).
MultiViewDataset make_paired_views(const MultiViewDataset& base, std::size_t n_views,
                                   std::uint64_t seed);

// Adds Uniform(0, 255) noise to every pixel in 0-255 space, truncates to
// [0, 255] and rescales to [0, 1]. Row i draws from a generator seeded by
// (seed, i).
ViewData make_noisy_view(const ViewData& images, std::uint64_t seed);

// Rotates every image about its center by an independent Uniform(-pi/4, pi/4)
// angle with inverse-mapped bilinear resampling; pixels that map outside the
// frame become 0. `fixed_angle` overrides the random draw.
ViewData make_rotated_view(const ViewData& images, std::uint64_t seed,
                           std::optional<double> fixed_angle = std::nullopt);

// Rotation of one (channels x height x width) image by `angle` radians.
std::vector<double> rotate_image(std::span<const double> image, const ImageShape& shape,
                                 double angle);

enum class NoiseSource {
  paired_clean,  // noise the independently drawn same-label base image
  rotated,       // noise a same-label image after it has been rotated
};

// Two-view noisy/rotated construction: view 1 rotates each base image; view 2
// is a noised image of the same label drawn from the base.
MultiViewDataset make_noisy_rotating(const MultiViewDataset& base, std::uint64_t seed,
                                     NoiseSource source = NoiseSource::paired_clean);

struct GaussianMultiviewSpec {
  std::size_t n_per_class = 200;
  std::size_t n_clusters = 3;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> view_dims{32, 32};
  std::uint64_t seed = 0;
  // Latent class means are at least this many within-class standard
  // deviations apart.
  double separation = 10.0;
  // Views 2..V also observe a class-independent nuisance factor: one of K
  // modes laid out like the class means but `nuisance` times farther apart,
  // plus unit noise. The class signal stays fully present in every view, but
  // the dominant structure of those views is the nuisance. Zero disables it.
  double nuisance = 3.0;
};

struct GaussianMultiview {
  MultiViewDataset dataset;
  Tensor latent;  // (N, latent_dim), before view noise
};

// K Gaussian clusters in a latent space observed through independent random
// affine maps followed by a sigmoid, each feature rescaled to [0, 1]. Labels
// are balanced and samples are ordered by class.
GaussianMultiview make_gaussian_multiview(const GaussianMultiviewSpec& spec);

}  // namespace demvc
