#pragma once

#include <cstdint>
#include <vector>

#include "demvc/adam.hpp"
#include "demvc/image_shape.hpp"
#include "demvc/layer.hpp"
#include "demvc/tensor.hpp"

namespace demvc {

// Layer sizes for one view's autoencoder. The fully connected stack is
// input -> hidden... -> embed with the decoder mirrored. With
// `convolutional` set, the encoder is a stride-2 convolution stack followed
// by a dense embedding layer and the decoder mirrors it with transposed
// convolutions.
struct AutoencoderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{500, 500, 2000};
  std::size_t embed_dim = 10;

  bool convolutional = false;
  ImageShape image;
  std::vector<std::size_t> conv_channels{32, 64, 128};
  std::vector<std::size_t> conv_kernels{5, 5, 3};
};

class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(std::size_t view_index, std::vector<LayerParams> encoder,
              std::vector<LayerParams> decoder);

  // Glorot-initialized network for `view_index` drawn from `seed`.
  static Autoencoder build(const AutoencoderConfig& config, std::size_t view_index,
                           std::uint64_t seed);

  std::size_t view_index() const { return view_index_; }
  std::size_t input_dim() const { return encoder_.front().input_dim(); }
  std::size_t embed_dim() const { return encoder_.back().output_dim(); }

  const std::vector<LayerParams>& encoder_layers() const { return encoder_; }
  const std::vector<LayerParams>& decoder_layers() const { return decoder_; }
  std::vector<LayerParams>& encoder_layers() { return encoder_; }
  std::vector<LayerParams>& decoder_layers() { return decoder_; }

  Tensor encode(const Tensor& batch) const;
  Tensor decode(const Tensor& embedding) const;
  Tensor reconstruct(const Tensor& batch) const;
  // Mean over the batch of the squared Euclidean reconstruction error.
  double reconstruction_loss(const Tensor& batch) const;

  struct Pass {
    Tensor embedding;
    Tensor reconstruction;
  };
  // Forward pass that keeps activations for `backward`.
  Pass forward(const Tensor& batch);
  // Backpropagates gradients w.r.t. the reconstruction and, optionally, an
  // extra gradient injected at the embedding. Returns one gradient per entry
  // of parameters(), in the same order.
  std::vector<Tensor> backward(const Tensor& grad_reconstruction,
                               const Tensor* grad_embedding = nullptr);

  // Weights and biases of every encoder layer, then every decoder layer.
  std::vector<Tensor*> parameters();
  std::size_t parameter_count() const;
  // Records an external write to the parameters, invalidating caches.
  void mark_updated();

 private:
  void check_input(const Tensor& batch) const;

  std::size_t view_index_ = 0;
  std::vector<LayerParams> encoder_;
  std::vector<LayerParams> decoder_;
  std::vector<LayerCache> encoder_cache_;
  std::vector<LayerCache> decoder_cache_;
};

// Mean squared reconstruction error and its gradient w.r.t. `reconstruction`.
double reconstruction_loss_and_grad(const Tensor& input, const Tensor& reconstruction,
                                    Tensor* grad);

struct PretrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
};

struct PretrainResult {
  std::vector<double> epoch_loss;
  AdamState optimizer;
};

// Minimizes the reconstruction loss over shuffled mini-batches of one view.
// The shuffle order for each epoch is derived from (seed, epoch).
PretrainResult pretrain(Autoencoder& ae, const Tensor& view_data,
                        const PretrainOptions& options);

}  // namespace demvc
