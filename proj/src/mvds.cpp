#include "demvc/mvds.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace demvc {

namespace {
constexpr char kMagic[5] = "MVDS";
constexpr std::uint16_t kVersion = 1;
}  // namespace

void save_mvds(const std::filesystem::path& path, const MultiViewDataset& ds) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write dataset " + path.string());
  binary::put_magic(out, kMagic);
  binary::put_uint<std::uint16_t>(out, kVersion);
  binary::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(ds.n_views()));
  binary::put_uint<std::uint64_t>(out, ds.n_samples());
  for (const auto& v : ds.views()) {
    binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.features.cols()));
    binary::put_uint<std::uint8_t>(out, v.image ? 1 : 0);
    if (v.image) {
      binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.image->height));
      binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.image->width));
      binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(v.image->channels));
    }
    binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(v.range));
  }
  for (const auto& v : ds.views()) {
    for (double x : v.features.values()) binary::put_f32(out, static_cast<float>(x));
  }
  binary::put_uint<std::uint8_t>(out, ds.has_labels() ? 1 : 0);
  if (ds.has_labels()) {
    for (auto l : *ds.labels()) binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(l));
  }
  if (!out) throw Error("failed writing dataset " + path.string());
}

MultiViewDataset load_mvds(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open dataset " + path.string());
  const std::string ctx = "dataset " + path.string();
  binary::expect_magic(in, kMagic, ctx);
  const auto version = binary::get_uint<std::uint16_t>(in, ctx);
  if (version != kVersion) {
    throw IngestionError(ctx + ": unsupported version " + std::to_string(version));
  }
  const auto n_views = binary::get_uint<std::uint16_t>(in, ctx);
  const auto n = binary::get_uint<std::uint64_t>(in, ctx);
  if (n_views == 0) throw IngestionError(ctx + ": no views");
  std::vector<ViewData> views(n_views);
  for (std::size_t v = 0; v < n_views; ++v) {
    const std::string vctx = ctx + " view " + std::to_string(v + 1);
    const auto dim = binary::get_uint<std::uint32_t>(in, vctx);
    if (binary::get_uint<std::uint8_t>(in, vctx) == 1) {
      ImageShape s;
      s.height = binary::get_uint<std::uint32_t>(in, vctx);
      s.width = binary::get_uint<std::uint32_t>(in, vctx);
      s.channels = binary::get_uint<std::uint32_t>(in, vctx);
      views[v].image = s;
    }
    const auto range = binary::get_uint<std::uint8_t>(in, vctx);
    if (range > 2) throw IngestionError(vctx + ": unknown range code " + std::to_string(range));
    views[v].range = static_cast<ValueRange>(range);
    views[v].features = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(dim)});
  }
  for (std::size_t v = 0; v < n_views; ++v) {
    const std::string vctx = ctx + " view " + std::to_string(v + 1) + " data";
    for (double& x : views[v].features.values()) x = binary::get_f32(in, vctx);
  }
  std::optional<Labels> labels;
  if (binary::get_uint<std::uint8_t>(in, ctx) == 1) {
    Labels l(n);
    for (auto& x : l) x = static_cast<std::int32_t>(binary::get_uint<std::uint32_t>(in, ctx + " labels"));
    labels = std::move(l);
  }
  MultiViewDataset ds;
  try {
    ds = MultiViewDataset(views, labels);
  } catch (const IngestionError& e) {
    throw IngestionError(ctx + ": " + e.what());
  }
  bool rescaled = false;
  for (auto& v : views) {
    if (v.range == ValueRange::byte255) {
      for (double& x : v.features.values()) x /= 255.0;
      v.range = ValueRange::unit;
      rescaled = true;
    }
  }
  return rescaled ? MultiViewDataset(std::move(views), std::move(labels)) : ds;
}

}  // namespace demvc
