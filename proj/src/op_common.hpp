#pragma once

#include "cscae/errors.hpp"
#include "cscae/graph.hpp"

namespace cscae::ops {

/// Reuses an output buffer when the shape already matches.
inline Tensor& prepare(Tensor& t, const Shape& shape) {
  if (t.shape() != shape) t = Tensor::zeros(shape);
  return t;
}

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError(std::string(op) + ": operand shapes differ, " +
                     shape_str(a.value().shape()) + " vs " +
                     shape_str(b.value().shape()));
}

inline void require_rank(const Var& v, int rank, const char* op) {
  if (v.value().rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     " tensor, got " + shape_str(v.value().shape()));
}

}  // namespace cscae::ops
