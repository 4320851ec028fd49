#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace demvc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shapes of operands disagree.
struct DimensionError : Error {
  using Error::Error;
};

// A precondition on arguments or call order was violated.
struct UsageError : Error {
  using Error::Error;
};

// A file could not be parsed or failed validation.
struct IngestionError : Error {
  using Error::Error;
};

// A training operation was called in the wrong phase.
struct PhaseError : Error {
  using Error::Error;
};

// A numerical evaluation produced a non-finite value.
struct EvaluationError : Error {
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

// Hard cluster or class labels, one per sample.
using Labels = std::vector<std::int32_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// The product of the extents always equals the number of stored values.
/// Rank 0 is not used; scalars are shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view helpers; valid for rank-2 tensors.
  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> row(std::size_t r) {
    const std::size_t w = size() / shape_.at(0);
    return {data_.data() + r * w, w};
  }
  std::span<const double> row(std::size_t r) const {
    const std::size_t w = size() / shape_.at(0);
    return {data_.data() + r * w, w};
  }

  void fill(double value);
  // Reinterprets the storage under a new shape with the same element count.
  void reshape(Shape shape);

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Gathers the given rows of a matrix into a new matrix.
Tensor gather_rows(const Tensor& m, std::span<const std::size_t> rows);

double squared_norm(std::span<const double> v);

// FNV-1a over the raw bytes; used to detect whether a tensor changed.
std::uint64_t checksum(const Tensor& t);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace demvc
