#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "demvc/image_shape.hpp"
#include "demvc/trainer.hpp"

namespace demvc {

// Everything a train or ablate command needs. Stored as flat key=value text:
//
//   # comment
//   dataset = data/bench.mvds
//   mode = demvc
//   hidden = 64,64,128
//
// Unknown keys are rejected so typos surface before training.
struct RunConfig {
  TrainConfig train;
  std::filesystem::path dataset;
  std::filesystem::path output;
  std::optional<ImageShape> image;  // shape hint for CSV inputs
  bool metrics = true;
  bool dump_embeddings = true;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};  // ablation sweep

  // Throws UsageError for an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  // Serializes every key in a fixed order; parse_run_config reads it back.
  std::string to_text() const;
  // Checks paths and the training schedule against the dataset shape.
  void validate(std::size_t n_views, std::size_t n_samples) const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

ImageShape parse_image_shape(const std::string& text);  // "28x28" or "28x28x1"

}  // namespace demvc
