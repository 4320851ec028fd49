#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "demvc/image_shape.hpp"
#include "demvc/tensor.hpp"

namespace demvc {

// Declared value range of a view's features.
enum class ValueRange : std::uint8_t {
  unit = 0,     // [0, 1]
  byte255 = 1,  // raw pixel values in [0, 255]; scaled to unit on load
  raw = 2,      // unconstrained finite values (embeddings)
};

struct ViewData {
  Tensor features;  // (N, D_v)
  std::optional<ImageShape> image;
  ValueRange range = ValueRange::unit;
};

/// N samples observed through V views, with optional ground-truth labels.
///
/// Row i of every view describes the same underlying object.
class MultiViewDataset {
 public:
  MultiViewDataset() = default;
  MultiViewDataset(std::vector<ViewData> views, std::optional<Labels> labels);

  std::size_t n_views() const { return views_.size(); }
  std::size_t n_samples() const { return views_.empty() ? 0 : views_.front().features.rows(); }
  const ViewData& view(std::size_t v) const { return views_.at(v); }
  const Tensor& features(std::size_t v) const { return views_.at(v).features; }
  const std::vector<ViewData>& views() const { return views_; }
  const std::optional<Labels>& labels() const { return labels_; }
  bool has_labels() const { return labels_.has_value(); }

  // Throws IngestionError naming the offending view and row.
  void validate() const;

  bool operator==(const MultiViewDataset& other) const;

 private:
  std::vector<ViewData> views_;
  std::optional<Labels> labels_;
};

// Rounds every value to the nearest float so the dataset survives an MVDS
// round trip unchanged.
void quantize_to_storage(Tensor& t);

// Loads an MVDS file, or a directory of view<k>.csv files (k = 1, 2, ...)
// with an optional labels.csv. CSV views whose values exceed [0, 1] are
// treated as 0-255 pixels when they fit that range and min-max scaled
// otherwise. `image` attaches a shape hint to every CSV view.
MultiViewDataset load_dataset(const std::filesystem::path& path,
                              std::optional<ImageShape> image = std::nullopt);

MultiViewDataset load_csv_directory(const std::filesystem::path& dir,
                                    std::optional<ImageShape> image = std::nullopt);

// Reads a header-free comma-separated numeric matrix.
Tensor read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Tensor& m);

}  // namespace demvc
