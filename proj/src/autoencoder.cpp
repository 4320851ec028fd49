#include "demvc/autoencoder.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "demvc/random.hpp"

namespace demvc {

namespace {

void check_chain(const std::vector<LayerParams>& layers, const char* what) {
  if (layers.empty()) throw UsageError(std::string(what) + " has no layers");
  for (const auto& l : layers) l.validate();
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i - 1].output_dim() != layers[i].input_dim()) {
      throw DimensionError(std::string(what) + " layer " + std::to_string(i - 1) +
                           " outputs " + std::to_string(layers[i - 1].output_dim()) +
                           " but layer " + std::to_string(i) + " expects " +
                           std::to_string(layers[i].input_dim()));
    }
  }
}

Tensor run_chain(const std::vector<LayerParams>& layers, const Tensor& input) {
  Tensor x = input;
  for (const auto& l : layers) x = layer_forward(l, x);
  return x;
}

std::vector<LayerParams> build_dense(const AutoencoderConfig& c, bool decoder) {
  std::vector<std::size_t> dims{c.input_dim};
  dims.insert(dims.end(), c.hidden.begin(), c.hidden.end());
  dims.push_back(c.embed_dim);
  if (decoder) std::reverse(dims.begin(), dims.end());
  std::vector<LayerParams> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    layers.push_back(LayerParams::affine(dims[i], dims[i + 1],
                                         last ? Activation::linear : Activation::relu));
  }
  return layers;
}

void build_conv(const AutoencoderConfig& c, std::vector<LayerParams>& enc,
                std::vector<LayerParams>& dec) {
  if (c.image.size() != c.input_dim) {
    throw DimensionError("image shape " + std::to_string(c.image.height) + "x" +
                         std::to_string(c.image.width) + "x" +
                         std::to_string(c.image.channels) + " does not match input dim " +
                         std::to_string(c.input_dim));
  }
  if (c.conv_channels.size() != c.conv_kernels.size() || c.conv_channels.empty()) {
    throw UsageError("conv_channels and conv_kernels must be non-empty and equal length");
  }
  struct Plane {
    std::size_t c, h, w;
  };
  std::vector<Plane> planes{{c.image.channels, c.image.height, c.image.width}};
  for (std::size_t i = 0; i < c.conv_channels.size(); ++i) {
    ConvGeometry g;
    g.in_channels = planes.back().c;
    g.in_height = planes.back().h;
    g.in_width = planes.back().w;
    g.out_channels = c.conv_channels[i];
    g.kernel = c.conv_kernels[i];
    enc.push_back(LayerParams::conv2d(g, Activation::relu));
    planes.push_back({g.out_channels, g.out_height(LayerKind::conv2d),
                      g.out_width(LayerKind::conv2d)});
  }
  const Plane top = planes.back();
  const std::size_t flat = top.c * top.h * top.w;
  enc.push_back(LayerParams::affine(flat, c.embed_dim, Activation::linear));

  dec.push_back(LayerParams::affine(c.embed_dim, flat, Activation::relu));
  for (std::size_t i = c.conv_channels.size(); i-- > 0;) {
    const Plane& from = planes[i + 1];
    const Plane& to = planes[i];
    ConvGeometry g;
    g.in_channels = from.c;
    g.in_height = from.h;
    g.in_width = from.w;
    g.out_channels = to.c;
    g.kernel = c.conv_kernels[i];
    const std::size_t base_h = (from.h - 1) * g.stride + g.kernel;
    const std::size_t base_w = (from.w - 1) * g.stride + g.kernel;
    if (to.h < base_h || to.w < base_w || to.h - base_h >= g.stride ||
        to.h - base_h != to.w - base_w) {
      throw DimensionError("cannot mirror convolution " + std::to_string(i) +
                           " with a transposed convolution");
    }
    g.output_padding = to.h - base_h;
    dec.push_back(LayerParams::conv2d_transpose(
        g, i == 0 ? Activation::linear : Activation::relu));
  }
}

}  // namespace

Autoencoder::Autoencoder(std::size_t view_index, std::vector<LayerParams> encoder,
                         std::vector<LayerParams> decoder)
    : view_index_(view_index), encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  check_chain(encoder_, "encoder");
  check_chain(decoder_, "decoder");
  if (encoder_.back().output_dim() != decoder_.front().input_dim()) {
    throw DimensionError("encoder embeds to " + std::to_string(encoder_.back().output_dim()) +
                         " but decoder expects " +
                         std::to_string(decoder_.front().input_dim()));
  }
  if (decoder_.back().output_dim() != encoder_.front().input_dim()) {
    throw DimensionError("decoder outputs " + std::to_string(decoder_.back().output_dim()) +
                         " but input dim is " + std::to_string(encoder_.front().input_dim()));
  }
  encoder_cache_.resize(encoder_.size());
  decoder_cache_.resize(decoder_.size());
}

Autoencoder Autoencoder::build(const AutoencoderConfig& config, std::size_t view_index,
                               std::uint64_t seed) {
  if (config.input_dim == 0 || config.embed_dim == 0) {
    throw UsageError("autoencoder dimensions must be positive");
  }
  std::vector<LayerParams> enc;
  std::vector<LayerParams> dec;
  if (config.convolutional) {
    build_conv(config, enc, dec);
  } else {
    enc = build_dense(config, false);
    dec = build_dense(config, true);
  }
  std::mt19937_64 rng(seed);
  for (auto& l : enc) glorot_init(l, rng);
  for (auto& l : dec) glorot_init(l, rng);
  return Autoencoder(view_index, std::move(enc), std::move(dec));
}

void Autoencoder::check_input(const Tensor& batch) const {
  if (batch.rank() != 2 || batch.cols() != input_dim()) {
    throw DimensionError("view " + std::to_string(view_index_) + " autoencoder expects [N x " +
                         std::to_string(input_dim()) + "], got " +
                         shape_string(batch.shape()));
  }
}

Tensor Autoencoder::encode(const Tensor& batch) const {
  check_input(batch);
  return run_chain(encoder_, batch);
}

Tensor Autoencoder::decode(const Tensor& embedding) const {
  return run_chain(decoder_, embedding);
}

Tensor Autoencoder::reconstruct(const Tensor& batch) const { return decode(encode(batch)); }

double Autoencoder::reconstruction_loss(const Tensor& batch) const {
  return reconstruction_loss_and_grad(batch, reconstruct(batch), nullptr);
}

Autoencoder::Pass Autoencoder::forward(const Tensor& batch) {
  check_input(batch);
  Pass pass;
  Tensor x = batch;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    x = layer_forward(encoder_[i], x, encoder_cache_[i]);
  }
  pass.embedding = x;
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    x = layer_forward(decoder_[i], x, decoder_cache_[i]);
  }
  pass.reconstruction = std::move(x);
  return pass;
}

std::vector<Tensor> Autoencoder::backward(const Tensor& grad_reconstruction,
                                          const Tensor* grad_embedding) {
  std::vector<Tensor> enc_grads(2 * encoder_.size());
  std::vector<Tensor> dec_grads(2 * decoder_.size());
  Tensor g = grad_reconstruction;
  for (std::size_t i = decoder_.size(); i-- > 0;) {
    LayerBackward b = layer_backward(decoder_[i], decoder_cache_[i], g);
    dec_grads[2 * i] = std::move(b.param_grads.weights);
    dec_grads[2 * i + 1] = std::move(b.param_grads.bias);
    g = std::move(b.input_grad);
  }
  if (grad_embedding) {
    require_same_shape(g, *grad_embedding, "embedding gradient");
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += (*grad_embedding)[j];
  }
  for (std::size_t i = encoder_.size(); i-- > 0;) {
    LayerBackward b = layer_backward(encoder_[i], encoder_cache_[i], g);
    enc_grads[2 * i] = std::move(b.param_grads.weights);
    enc_grads[2 * i + 1] = std::move(b.param_grads.bias);
    g = std::move(b.input_grad);
  }
  std::vector<Tensor> grads = std::move(enc_grads);
  for (auto& t : dec_grads) grads.push_back(std::move(t));
  return grads;
}

std::vector<Tensor*> Autoencoder::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : encoder_) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  for (auto& l : decoder_) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Autoencoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : encoder_) n += l.weights.size() + l.bias.size();
  for (const auto& l : decoder_) n += l.weights.size() + l.bias.size();
  return n;
}

void Autoencoder::mark_updated() {
  for (auto& l : encoder_) ++l.revision;
  for (auto& l : decoder_) ++l.revision;
}

double reconstruction_loss_and_grad(const Tensor& input, const Tensor& reconstruction,
                                    Tensor* grad) {
  require_same_shape(input, reconstruction, "reconstruction");
  const std::size_t n = input.rows();
  if (n == 0) throw UsageError("reconstruction loss of an empty batch");
  const double scale = 1.0 / static_cast<double>(n);
  double total = 0.0;
  if (grad) *grad = Tensor(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double diff = reconstruction[i] - input[i];
    total += diff * diff;
    if (grad) (*grad)[i] = 2.0 * diff * scale;
  }
  return total * scale;
}

PretrainResult pretrain(Autoencoder& ae, const Tensor& view_data,
                        const PretrainOptions& options) {
  if (options.epochs == 0) throw UsageError("pretraining needs at least one epoch");
  if (options.batch_size == 0) throw UsageError("batch size must be at least 1");
  if (view_data.rank() != 2 || view_data.rows() == 0) {
    throw UsageError("pretraining needs a non-empty [N x D] view");
  }
  const std::size_t n = view_data.rows();
  PretrainResult result;
  result.optimizer.learning_rate = options.learning_rate;
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(options.seed, {0x5052, epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t end = std::min(n, start + options.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      Tensor batch = gather_rows(view_data, rows);
      Autoencoder::Pass pass = ae.forward(batch);
      Tensor grad;
      const double loss = reconstruction_loss_and_grad(batch, pass.reconstruction, &grad);
      if (!std::isfinite(loss)) throw EvaluationError("pretraining loss became non-finite");
      std::vector<Tensor> grads = ae.backward(grad);
      std::vector<Tensor*> params = ae.parameters();
      adam_step(result.optimizer, params, grads);
      ae.mark_updated();
      weighted += loss * static_cast<double>(end - start);
    }
    result.epoch_loss.push_back(weighted / static_cast<double>(n));
  }
  return result;
}

}  // namespace demvc
