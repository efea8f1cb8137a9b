#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cscae/errors.hpp"

namespace cscae {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of 32-bit floats: the single value type for images,
/// feature maps, parameters and gradients.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)),
        v_(static_cast<std::size_t>(shape_numel(shape_)), 0.0f) {}
  Tensor(Shape shape, std::vector<float> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, float value);
  static Tensor scalar(float value) { return full({1}, value); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(v_.size()); }
  bool defined() const { return !shape_.empty(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  float* data() { return v_.data(); }
  const float* data() const { return v_.data(); }
  float& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return v_[static_cast<std::size_t>(i)]; }

  /// Rank-4 (b, c, y, x) accessors for NCHW tensors.
  float& at4(int b, int c, int y, int x) { return v_[idx4(b, c, y, x)]; }
  float at4(int b, int c, int y, int x) const { return v_[idx4(b, c, y, x)]; }

  bool all_finite() const;
  void fill(float value);
  void set_zero() { fill(0.0f); }

  Eigen::Map<Eigen::ArrayXf> array() {
    return {v_.data(), static_cast<Eigen::Index>(v_.size())};
  }
  Eigen::Map<const Eigen::ArrayXf> array() const {
    return {v_.data(), static_cast<Eigen::Index>(v_.size())};
  }

 private:
  std::size_t idx4(int b, int c, int y, int x) const;

  Shape shape_;
  std::vector<float> v_;
};

using MatrixRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Views a contiguous buffer as a rows x cols row-major matrix.
Eigen::Map<MatrixRM> matrix_view(Tensor& t, std::int64_t rows, std::int64_t cols);
Eigen::Map<const MatrixRM> matrix_view(const Tensor& t, std::int64_t rows,
                                       std::int64_t cols);

}  // namespace cscae
