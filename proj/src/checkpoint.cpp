#include "demvc/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace demvc {

namespace {

constexpr char kMagic[5] = "AECP";
constexpr std::uint16_t kVersion = 1;

void write_layer(std::ostream& out, const LayerParams& l) {
  binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(l.kind));
  binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
  binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(l.weights.rank()));
  for (std::size_t e : l.weights.shape()) binary::put_uint<std::uint64_t>(out, e);
  binary::put_uint<std::uint64_t>(out, l.bias.size());
  const auto& g = l.conv;
  for (std::size_t v : {g.in_channels, g.in_height, g.in_width, g.out_channels, g.kernel,
                        g.stride, g.output_padding}) {
    binary::put_uint<std::uint64_t>(out, l.kind == LayerKind::affine ? 0 : v);
  }
  for (double w : l.weights.values()) binary::put_f64(out, w);
  for (double b : l.bias.values()) binary::put_f64(out, b);
}

LayerParams read_layer(std::istream& in, const std::string& ctx) {
  LayerParams l;
  const auto kind = binary::get_uint<std::uint8_t>(in, ctx);
  const auto act = binary::get_uint<std::uint8_t>(in, ctx);
  if (kind > 2 || act > 1) throw IngestionError(ctx + ": unknown layer kind or activation");
  l.kind = static_cast<LayerKind>(kind);
  l.activation = static_cast<Activation>(act);
  const auto rank = binary::get_uint<std::uint8_t>(in, ctx);
  if (rank == 0 || rank > 4) throw IngestionError(ctx + ": invalid weight rank");
  Shape shape(rank);
  for (auto& e : shape) e = binary::get_uint<std::uint64_t>(in, ctx);
  const auto bias_len = binary::get_uint<std::uint64_t>(in, ctx);
  std::uint64_t geo[7];
  for (auto& v : geo) v = binary::get_uint<std::uint64_t>(in, ctx);
  l.conv = {geo[0], geo[1], geo[2], geo[3], geo[4], geo[5], geo[6]};
  l.weights = Tensor(shape);
  for (double& w : l.weights.values()) w = binary::get_f64(in, ctx);
  l.bias = Tensor({bias_len});
  for (double& b : l.bias.values()) b = binary::get_f64(in, ctx);
  try {
    l.validate();
  } catch (const DimensionError& e) {
    throw IngestionError(ctx + ": " + e.what());
  }
  return l;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Autoencoder& ae,
                     const AdamState* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write checkpoint " + path.string());
  binary::put_magic(out, kMagic);
  binary::put_uint<std::uint16_t>(out, kVersion);
  binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ae.view_index()));
  binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ae.encoder_layers().size()));
  binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ae.decoder_layers().size()));
  for (const auto& l : ae.encoder_layers()) write_layer(out, l);
  for (const auto& l : ae.decoder_layers()) write_layer(out, l);
  const bool has_opt = optimizer && !optimizer->first_moment.empty();
  binary::put_uint<std::uint8_t>(out, has_opt ? 1 : 0);
  if (has_opt) {
    binary::put_uint<std::uint64_t>(out, optimizer->step_count);
    binary::put_f64(out, optimizer->learning_rate);
    binary::put_f64(out, optimizer->beta1);
    binary::put_f64(out, optimizer->beta2);
    binary::put_f64(out, optimizer->epsilon);
    binary::put_uint<std::uint32_t>(out,
                                    static_cast<std::uint32_t>(optimizer->first_moment.size()));
    for (const auto& m : optimizer->first_moment) {
      for (double v : m.values()) binary::put_f64(out, v);
    }
    for (const auto& m : optimizer->second_moment) {
      for (double v : m.values()) binary::put_f64(out, v);
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint " + path.string());
  const std::string ctx = "checkpoint " + path.string();
  binary::expect_magic(in, kMagic, ctx);
  const auto version = binary::get_uint<std::uint16_t>(in, ctx);
  if (version != kVersion) {
    throw IngestionError(ctx + ": unsupported version " + std::to_string(version));
  }
  const auto view = binary::get_uint<std::uint32_t>(in, ctx);
  const auto n_enc = binary::get_uint<std::uint32_t>(in, ctx);
  const auto n_dec = binary::get_uint<std::uint32_t>(in, ctx);
  std::vector<LayerParams> enc;
  std::vector<LayerParams> dec;
  for (std::uint32_t i = 0; i < n_enc; ++i) enc.push_back(read_layer(in, ctx));
  for (std::uint32_t i = 0; i < n_dec; ++i) dec.push_back(read_layer(in, ctx));
  Checkpoint cp;
  try {
    cp.autoencoder = Autoencoder(view, std::move(enc), std::move(dec));
  } catch (const Error& e) {
    throw IngestionError(ctx + ": " + e.what());
  }
  if (binary::get_uint<std::uint8_t>(in, ctx) == 1) {
    AdamState opt;
    opt.step_count = binary::get_uint<std::uint64_t>(in, ctx);
    opt.learning_rate = binary::get_f64(in, ctx);
    opt.beta1 = binary::get_f64(in, ctx);
    opt.beta2 = binary::get_f64(in, ctx);
    opt.epsilon = binary::get_f64(in, ctx);
    const auto count = binary::get_uint<std::uint32_t>(in, ctx);
    std::vector<Tensor*> params = cp.autoencoder.parameters();
    if (count != params.size()) throw IngestionError(ctx + ": optimizer tensor count mismatch");
    for (auto* list : {&opt.first_moment, &opt.second_moment}) {
      for (const Tensor* p : params) {
        Tensor m(p->shape());
        for (double& v : m.values()) v = binary::get_f64(in, ctx);
        list->push_back(std::move(m));
      }
    }
    cp.optimizer = std::move(opt);
  }
  return cp;
}

}  // namespace demvc
