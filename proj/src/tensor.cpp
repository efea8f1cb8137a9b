#include "cscae/tensor.hpp"

#include <cmath>
#include <sstream>

namespace cscae {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), v_(std::move(values)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(v_.size()))
    throw ShapeError("value count " + std::to_string(v_.size()) +
                     " does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(Shape shape, float value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

int Tensor::dim(int i) const {
  if (i < 0 || i >= rank())
    throw ShapeError("dim " + std::to_string(i) + " out of range for " + shape_str(shape_));
  return shape_[static_cast<std::size_t>(i)];
}

bool Tensor::all_finite() const {
  for (float x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::fill(float value) {
  std::fill(v_.begin(), v_.end(), value);
}

std::size_t Tensor::idx4(int b, int c, int y, int x) const {
  const int C = shape_[1], H = shape_[2], W = shape_[3];
  return static_cast<std::size_t>(((static_cast<std::int64_t>(b) * C + c) * H + y) * W + x);
}

Eigen::Map<MatrixRM> matrix_view(Tensor& t, std::int64_t rows, std::int64_t cols) {
  if (rows * cols != t.numel())
    throw ShapeError("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " does not cover tensor " + shape_str(t.shape()));
  return {t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const MatrixRM> matrix_view(const Tensor& t, std::int64_t rows,
                                       std::int64_t cols) {
  if (rows * cols != t.numel())
    throw ShapeError("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " does not cover tensor " + shape_str(t.shape()));
  return {t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

}  // namespace cscae
