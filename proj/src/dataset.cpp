#include "demvc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "demvc/mvds.hpp"

namespace demvc {

MultiViewDataset::MultiViewDataset(std::vector<ViewData> views, std::optional<Labels> labels)
    : views_(std::move(views)), labels_(std::move(labels)) {
  validate();
}

void MultiViewDataset::validate() const {
  if (views_.empty()) throw IngestionError("dataset has no views");
  const std::size_t n = views_.front().features.rank() == 2 ? views_.front().features.rows() : 0;
  if (n == 0) throw IngestionError("view 1 has no samples");
  for (std::size_t v = 0; v < views_.size(); ++v) {
    const auto& vd = views_[v];
    const std::string name = "view " + std::to_string(v + 1);
    if (vd.features.rank() != 2 || vd.features.cols() == 0) {
      throw IngestionError(name + " must be an (N, D) matrix, got " +
                           shape_string(vd.features.shape()));
    }
    if (vd.features.rows() != n) {
      throw IngestionError(name + " has " + std::to_string(vd.features.rows()) +
                           " rows but view 1 has " + std::to_string(n));
    }
    if (vd.image && vd.image->size() != vd.features.cols()) {
      throw IngestionError(name + " image shape does not match its " +
                           std::to_string(vd.features.cols()) + " features");
    }
    const double hi = vd.range == ValueRange::byte255 ? 255.0 : 1.0;
    const std::size_t d = vd.features.cols();
    for (std::size_t i = 0; i < vd.features.size(); ++i) {
      const double x = vd.features[i];
      if (!std::isfinite(x)) {
        throw IngestionError(name + " row " + std::to_string(i / d) + " has a non-finite value");
      }
      if (vd.range != ValueRange::raw && (x < 0.0 || x > hi)) {
        throw IngestionError(name + " row " + std::to_string(i / d) + " value " +
                             std::to_string(x) + " is outside its declared range");
      }
    }
  }
  if (labels_) {
    if (labels_->size() != n) {
      throw IngestionError("labels have " + std::to_string(labels_->size()) +
                           " entries for " + std::to_string(n) + " samples");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((*labels_)[i] < 0) throw IngestionError("label row " + std::to_string(i) + " is negative");
    }
  }
}

bool MultiViewDataset::operator==(const MultiViewDataset& other) const {
  if (views_.size() != other.views_.size() || labels_ != other.labels_) return false;
  for (std::size_t v = 0; v < views_.size(); ++v) {
    const auto& a = views_[v];
    const auto& b = other.views_[v];
    if (!(a.features == b.features) || a.image != b.image || a.range != b.range) return false;
  }
  return true;
}

void quantize_to_storage(Tensor& t) {
  for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
}

Tensor read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
        data.push_back(v);
      } catch (const std::exception&) {
        throw IngestionError(path.string() + " row " + std::to_string(rows) +
                             ": cannot parse \"" + cell + "\"");
      }
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw IngestionError(path.string() + " row " + std::to_string(rows) + " has " +
                           std::to_string(count) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw IngestionError(path.string() + " is empty");
  return Tensor({rows, cols}, std::move(data));
}

void write_csv_matrix(const std::filesystem::path& path, const Tensor& m) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out.precision(17);
  const std::size_t cols = m.size() / m.extent(0);
  for (std::size_t i = 0; i < m.extent(0); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out << ',';
      out << m[i * cols + j];
    }
    out << '\n';
  }
}

MultiViewDataset load_csv_directory(const std::filesystem::path& dir,
                                    std::optional<ImageShape> image) {
  std::vector<ViewData> views;
  for (std::size_t k = 1;; ++k) {
    const auto file = dir / ("view" + std::to_string(k) + ".csv");
    if (!std::filesystem::exists(file)) break;
    ViewData vd;
    vd.features = read_csv_matrix(file);
    vd.image = image;
    const auto [lo, hi] = std::ranges::minmax(vd.features.values());
    if (lo < 0.0 || hi > 1.0) {
      if (lo >= 0.0 && hi <= 255.0) {
        for (double& x : vd.features.values()) x /= 255.0;
      } else {
        const double span = hi > lo ? hi - lo : 1.0;
        for (double& x : vd.features.values()) x = (x - lo) / span;
      }
    }
    views.push_back(std::move(vd));
  }
  if (views.empty()) {
    throw IngestionError(dir.string() + " contains no view1.csv");
  }
  std::optional<Labels> labels;
  const auto label_file = dir / "labels.csv";
  if (std::filesystem::exists(label_file)) {
    const Tensor raw = read_csv_matrix(label_file);
    Labels l;
    for (double v : raw.values()) {
      if (v != std::floor(v)) throw IngestionError("labels.csv contains a non-integer label");
      l.push_back(static_cast<std::int32_t>(v));
    }
    labels = std::move(l);
  }
  return MultiViewDataset(std::move(views), std::move(labels));
}

MultiViewDataset load_dataset(const std::filesystem::path& path,
                              std::optional<ImageShape> image) {
  if (!std::filesystem::exists(path)) {
    throw IngestionError("dataset path does not exist: " + path.string());
  }
  if (std::filesystem::is_directory(path)) return load_csv_directory(path, image);
  return load_mvds(path);
}

}  // namespace demvc
