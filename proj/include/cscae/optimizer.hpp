#pragma once

#include <map>
#include <vector>

#include "cscae/layers.hpp"

namespace cscae {

/// SGD with momentum: v <- momentum * v - lr * grad; param <- param + v.
/// Velocity buffers are keyed by parameter name and created lazily at zero.
struct SgdMomentum {
  float learning_rate = 0.03f;
  float momentum = 0.9f;
  std::map<std::string, Tensor> velocity;

  SgdMomentum() = default;
  SgdMomentum(float lr, float momentum_) : learning_rate(lr), momentum(momentum_) {}

  /// Applies one update; throws NumericError on a non-finite gradient
  /// (training divergence signal).
  void step(const std::vector<Parameter*>& params);
};

}  // namespace cscae
