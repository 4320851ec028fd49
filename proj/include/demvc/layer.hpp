#pragma once

#include <cstdint>
#include <random>

#include "demvc/tensor.hpp"

namespace demvc {

enum class LayerKind : std::uint8_t { affine = 0, conv2d = 1, conv2d_transpose = 2 };
enum class Activation : std::uint8_t { linear = 0, relu = 1 };

const char* to_string(LayerKind kind);
const char* to_string(Activation act);

// Spatial layout of a convolution. Inputs and outputs are flattened per
// sample as channels x height x width. Padding is always zero.
struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 2;
  // Extra rows/columns appended to a transposed convolution's output so a
  // decoder can reproduce the exact encoder input size.
  std::size_t output_padding = 0;

  std::size_t out_height(LayerKind kind) const;
  std::size_t out_width(LayerKind kind) const;
};

/// Parameters of one layer.
///
/// affine: weights (out, in), bias (out).
/// conv2d: weights (out_c, in_c, k, k), bias (out_c).
/// conv2d_transpose: weights (in_c, out_c, k, k), bias (out_c).
struct LayerParams {
  LayerKind kind = LayerKind::affine;
  Activation activation = Activation::linear;
  Tensor weights;
  Tensor bias;
  ConvGeometry conv;
  // Bumped whenever the optimizer writes the parameters; a cache filled
  // under an older revision is stale.
  std::uint64_t revision = 0;

  static LayerParams affine(std::size_t in_dim, std::size_t out_dim, Activation act);
  static LayerParams conv2d(const ConvGeometry& geometry, Activation act);
  static LayerParams conv2d_transpose(const ConvGeometry& geometry, Activation act);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  // Throws DimensionError if weights/bias disagree with kind and geometry.
  void validate() const;
};

struct LayerCache {
  Tensor input;
  Tensor pre_activation;
  std::uint64_t revision = 0;
  bool valid = false;
};

struct LayerGrads {
  Tensor weights;
  Tensor bias;
};

struct LayerBackward {
  Tensor input_grad;
  LayerGrads param_grads;
};

// Input is (batch, input_dim), or a rank-1 tensor treated as one sample.
Tensor layer_forward(const LayerParams& params, const Tensor& input, LayerCache& cache);
Tensor layer_forward(const LayerParams& params, const Tensor& input);

LayerBackward layer_backward(const LayerParams& params, const LayerCache& cache,
                             const Tensor& upstream_grad);

// Uniform Glorot scaling by fan-in and fan-out; biases are zeroed.
void glorot_init(LayerParams& params, std::mt19937_64& rng);

}  // namespace demvc
