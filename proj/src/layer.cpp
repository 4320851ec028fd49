#include "demvc/layer.hpp"

#include <cmath>

#include "demvc/kernels.hpp"

namespace demvc {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::affine: return "affine";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::conv2d_transpose: return "conv2d_transpose";
  }
  return "?";
}

const char* to_string(Activation act) {
  return act == Activation::relu ? "relu" : "linear";
}

std::size_t ConvGeometry::out_height(LayerKind kind) const {
  if (kind == LayerKind::conv2d) return (in_height - kernel) / stride + 1;
  return (in_height - 1) * stride + kernel + output_padding;
}

std::size_t ConvGeometry::out_width(LayerKind kind) const {
  if (kind == LayerKind::conv2d) return (in_width - kernel) / stride + 1;
  return (in_width - 1) * stride + kernel + output_padding;
}

LayerParams LayerParams::affine(std::size_t in_dim, std::size_t out_dim, Activation act) {
  LayerParams p;
  p.kind = LayerKind::affine;
  p.activation = act;
  p.weights = Tensor({out_dim, in_dim});
  p.bias = Tensor({out_dim});
  return p;
}

LayerParams LayerParams::conv2d(const ConvGeometry& g, Activation act) {
  if (g.kernel == 0 || g.stride == 0 || g.in_height < g.kernel || g.in_width < g.kernel) {
    throw DimensionError("conv2d kernel " + std::to_string(g.kernel) +
                         " does not fit input " + std::to_string(g.in_height) + "x" +
                         std::to_string(g.in_width));
  }
  LayerParams p;
  p.kind = LayerKind::conv2d;
  p.activation = act;
  p.conv = g;
  p.weights = Tensor({g.out_channels, g.in_channels, g.kernel, g.kernel});
  p.bias = Tensor({g.out_channels});
  return p;
}

LayerParams LayerParams::conv2d_transpose(const ConvGeometry& g, Activation act) {
  if (g.kernel == 0 || g.stride == 0 || g.output_padding >= g.stride) {
    throw DimensionError("invalid transposed convolution geometry");
  }
  LayerParams p;
  p.kind = LayerKind::conv2d_transpose;
  p.activation = act;
  p.conv = g;
  p.weights = Tensor({g.in_channels, g.out_channels, g.kernel, g.kernel});
  p.bias = Tensor({g.out_channels});
  return p;
}

std::size_t LayerParams::input_dim() const {
  if (kind == LayerKind::affine) return weights.extent(1);
  return conv.in_channels * conv.in_height * conv.in_width;
}

std::size_t LayerParams::output_dim() const {
  if (kind == LayerKind::affine) return weights.extent(0);
  return conv.out_channels * conv.out_height(kind) * conv.out_width(kind);
}

void LayerParams::validate() const {
  Shape expected_w;
  Shape expected_b;
  if (kind == LayerKind::affine) {
    if (weights.rank() != 2) {
      throw DimensionError("affine weights must be rank 2, got " +
                           shape_string(weights.shape()));
    }
    expected_w = weights.shape();
    expected_b = {weights.extent(0)};
  } else if (kind == LayerKind::conv2d) {
    expected_w = {conv.out_channels, conv.in_channels, conv.kernel, conv.kernel};
    expected_b = {conv.out_channels};
  } else {
    expected_w = {conv.in_channels, conv.out_channels, conv.kernel, conv.kernel};
    expected_b = {conv.out_channels};
  }
  if (weights.shape() != expected_w) {
    throw DimensionError(std::string(to_string(kind)) + " weights " +
                         shape_string(weights.shape()) + ", expected " +
                         shape_string(expected_w));
  }
  if (bias.shape() != expected_b) {
    throw DimensionError(std::string(to_string(kind)) + " bias " +
                         shape_string(bias.shape()) + ", expected " +
                         shape_string(expected_b));
  }
}

namespace {

Tensor as_batch(const Tensor& input) {
  if (input.rank() == 1) return Tensor({1, input.size()}, std::vector<double>(input.values().begin(), input.values().end()));
  if (input.rank() != 2) {
    throw DimensionError("layer input must be rank 1 or 2, got " +
                         shape_string(input.shape()));
  }
  return input;
}

void conv_forward(const LayerParams& p, const Tensor& in, Tensor& out) {
  const auto& g = p.conv;
  const std::size_t batch = in.rows();
  const std::size_t oh = g.out_height(p.kind);
  const std::size_t ow = g.out_width(p.kind);
  const std::size_t k = g.kernel;
  const std::size_t s = g.stride;
  const std::size_t in_plane = g.in_height * g.in_width;
  const std::size_t out_plane = oh * ow;
  const double* w = p.weights.data();
  const double* b = p.bias.data();

#pragma omp parallel for schedule(static)
  for (std::size_t n = 0; n < batch; ++n) {
    const double* x = in.data() + n * in.cols();
    double* y = out.data() + n * out.cols();
    for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
      std::fill(y + oc * out_plane, y + (oc + 1) * out_plane, b[oc]);
    }
    if (p.kind == LayerKind::conv2d) {
      for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            double acc = 0.0;
            for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
              const double* wk = w + ((oc * g.in_channels + ic) * k) * k;
              const double* xp = x + ic * in_plane;
              for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                  acc += wk[ky * k + kx] * xp[(oy * s + ky) * g.in_width + ox * s + kx];
                }
              }
            }
            y[oc * out_plane + oy * ow + ox] += acc;
          }
        }
      }
    } else {
      for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
        for (std::size_t iy = 0; iy < g.in_height; ++iy) {
          for (std::size_t ix = 0; ix < g.in_width; ++ix) {
            const double xv = x[ic * in_plane + iy * g.in_width + ix];
            for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
              const double* wk = w + ((ic * g.out_channels + oc) * k) * k;
              double* yp = y + oc * out_plane;
              for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                  yp[(iy * s + ky) * ow + ix * s + kx] += wk[ky * k + kx] * xv;
                }
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward(const LayerParams& p, const Tensor& in, const Tensor& grad_out,
                   LayerBackward& result) {
  const auto& g = p.conv;
  const std::size_t batch = in.rows();
  const std::size_t oh = g.out_height(p.kind);
  const std::size_t ow = g.out_width(p.kind);
  const std::size_t k = g.kernel;
  const std::size_t s = g.stride;
  const std::size_t in_plane = g.in_height * g.in_width;
  const std::size_t out_plane = oh * ow;
  const double* w = p.weights.data();
  const bool forward_conv = p.kind == LayerKind::conv2d;

  // Maps (input channel, output channel, ky, kx) to a weight offset.
  auto widx = [&](std::size_t ic, std::size_t oc) {
    return forward_conv ? (oc * g.in_channels + ic) * k * k
                        : (ic * g.out_channels + oc) * k * k;
  };
  // Output pixel touched by input pixel (iy, ix) through tap (ky, kx) is the
  // same relation for both kinds when written from the strided side.
  auto out_of = [&](std::size_t iy, std::size_t ix, std::size_t ky, std::size_t kx,
                    std::size_t& oy, std::size_t& ox) -> bool {
    if (!forward_conv) {
      oy = iy * s + ky;
      ox = ix * s + kx;
      return true;
    }
    if (iy < ky || ix < kx) return false;
    if ((iy - ky) % s != 0 || (ix - kx) % s != 0) return false;
    oy = (iy - ky) / s;
    ox = (ix - kx) / s;
    return oy < oh && ox < ow;
  };

  Tensor& dx = result.input_grad;
  Tensor& dw = result.param_grads.weights;
  Tensor& db = result.param_grads.bias;

#pragma omp parallel for schedule(static)
  for (std::size_t n = 0; n < batch; ++n) {
    const double* gy = grad_out.data() + n * grad_out.cols();
    double* gx = dx.data() + n * dx.cols();
    for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
      for (std::size_t iy = 0; iy < g.in_height; ++iy) {
        for (std::size_t ix = 0; ix < g.in_width; ++ix) {
          double acc = 0.0;
          for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
            const double* wk = w + widx(ic, oc);
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                std::size_t oy, ox;
                if (!out_of(iy, ix, ky, kx, oy, ox)) continue;
                acc += wk[ky * k + kx] * gy[oc * out_plane + oy * ow + ox];
              }
            }
          }
          gx[ic * in_plane + iy * g.in_width + ix] = acc;
        }
      }
    }
  }

  // Parameter gradients reduce over the batch in ascending sample order.
#pragma omp parallel for schedule(static)
  for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
    double bias_acc = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const double* gy = grad_out.data() + n * grad_out.cols() + oc * out_plane;
      for (std::size_t q = 0; q < out_plane; ++q) bias_acc += gy[q];
    }
    db[oc] = bias_acc;
    for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
      double* dwk = dw.data() + widx(ic, oc);
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (std::size_t n = 0; n < batch; ++n) {
            const double* x = in.data() + n * in.cols() + ic * in_plane;
            const double* gy = grad_out.data() + n * grad_out.cols() + oc * out_plane;
            for (std::size_t iy = 0; iy < g.in_height; ++iy) {
              for (std::size_t ix = 0; ix < g.in_width; ++ix) {
                std::size_t oy, ox;
                if (!out_of(iy, ix, ky, kx, oy, ox)) continue;
                acc += x[iy * g.in_width + ix] * gy[oy * ow + ox];
              }
            }
          }
          dwk[ky * k + kx] = acc;
        }
      }
    }
  }
}

Tensor forward_impl(const LayerParams& params, const Tensor& batch, Tensor* pre_out) {
  params.validate();
  if (batch.cols() != params.input_dim()) {
    throw DimensionError(std::string(to_string(params.kind)) + " layer expects input " +
                         shape_string({batch.rows(), params.input_dim()}) + ", got " +
                         shape_string(batch.shape()));
  }
  const std::size_t n = batch.rows();
  const std::size_t out_dim = params.output_dim();
  Tensor pre({n, out_dim});
  if (params.kind == LayerKind::affine) {
    kernels::matmul_nt(batch.values(), params.weights.values(), pre.values(), n, out_dim,
                       params.input_dim());
    for (std::size_t i = 0; i < n; ++i) {
      double* r = pre.data() + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) r[j] += params.bias[j];
    }
  } else {
    conv_forward(params, batch, pre);
  }
  Tensor out = pre;
  if (params.activation == Activation::relu) {
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  }
  if (pre_out) *pre_out = std::move(pre);
  return out;
}

}  // namespace

Tensor layer_forward(const LayerParams& params, const Tensor& input, LayerCache& cache) {
  Tensor batch = as_batch(input);
  Tensor pre;
  Tensor out = forward_impl(params, batch, &pre);
  cache.input = std::move(batch);
  cache.pre_activation = std::move(pre);
  cache.revision = params.revision;
  cache.valid = true;
  if (input.rank() == 1) out.reshape({out.size()});
  return out;
}

Tensor layer_forward(const LayerParams& params, const Tensor& input) {
  Tensor out = forward_impl(params, as_batch(input), nullptr);
  if (input.rank() == 1) out.reshape({out.size()});
  return out;
}

LayerBackward layer_backward(const LayerParams& params, const LayerCache& cache,
                             const Tensor& upstream_grad) {
  if (!cache.valid) throw UsageError("layer_backward called without a forward cache");
  if (cache.revision != params.revision) {
    throw UsageError("layer_backward cache is stale: parameters changed since forward");
  }
  const Tensor& in = cache.input;
  const std::size_t n = in.rows();
  const std::size_t out_dim = params.output_dim();
  if (upstream_grad.size() != n * out_dim ||
      (upstream_grad.rank() == 2 && upstream_grad.rows() != n)) {
    throw DimensionError("upstream gradient " + shape_string(upstream_grad.shape()) +
                         " does not match layer output " + shape_string({n, out_dim}));
  }
  if (cache.input.cols() != params.input_dim()) {
    throw UsageError("layer_backward cache was filled by a different layer");
  }

  Tensor grad_pre({n, out_dim},
                  std::vector<double>(upstream_grad.values().begin(),
                                      upstream_grad.values().end()));
  if (params.activation == Activation::relu) {
    for (std::size_t i = 0; i < grad_pre.size(); ++i) {
      if (cache.pre_activation[i] <= 0.0) grad_pre[i] = 0.0;
    }
  }

  LayerBackward result;
  result.input_grad = Tensor({n, params.input_dim()});
  result.param_grads.weights = Tensor(params.weights.shape());
  result.param_grads.bias = Tensor(params.bias.shape());

  if (params.kind == LayerKind::affine) {
    const std::size_t in_dim = params.input_dim();
    kernels::matmul_nn(grad_pre.values(), params.weights.values(),
                       result.input_grad.values(), n, in_dim, out_dim);
    kernels::matmul_tn(grad_pre.values(), in.values(), result.param_grads.weights.values(),
                       out_dim, in_dim, n);
    kernels::column_sums(grad_pre.values(), result.param_grads.bias.values(), n, out_dim);
  } else {
    conv_backward(params, in, grad_pre, result);
  }
  if (upstream_grad.rank() == 1) result.input_grad.reshape({params.input_dim()});
  return result;
}

void glorot_init(LayerParams& params, std::mt19937_64& rng) {
  double fan_in;
  double fan_out;
  if (params.kind == LayerKind::affine) {
    fan_in = static_cast<double>(params.weights.extent(1));
    fan_out = static_cast<double>(params.weights.extent(0));
  } else {
    const double area = static_cast<double>(params.conv.kernel * params.conv.kernel);
    fan_in = static_cast<double>(params.conv.in_channels) * area;
    fan_out = static_cast<double>(params.conv.out_channels) * area;
  }
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : params.weights.values()) w = dist(rng);
  params.bias.fill(0.0);
  ++params.revision;
}

}  // namespace demvc
