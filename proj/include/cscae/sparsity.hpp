#pragma once

#include <string>
#include <vector>

#include "cscae/tensor.hpp"

namespace cscae {

/// Constants of the detection gate: sigmoid slope r, expected sparsity rate
/// p (percent of active grid locations), and the running-average factor
/// alpha of the threshold update.
struct SparsityGateConfig {
  float r = 20.0f;
  float p = 1.6f;
  float alpha = 0.1f;

  void validate() const;
};

/// Exponential moving average of the per-batch upper percentile; plays the
/// role running statistics play for batch normalization. Persisted bit-exactly
/// in checkpoints.
struct RunningThreshold {
  float t = 0.0f;
  bool initialized = false;

  /// First observation seeds t; later ones blend t <- (1-alpha)*t + alpha*b.
  void update(float batch_percentile, float alpha);
  /// Threshold used at evaluation time (0 until first update).
  float current() const { return initialized ? t : 0.0f; }
};

/// Nearest-rank upper percentile: the ascending-sorted element at 1-based
/// index ceil((1 - p/100) * N), so at most p% of values strictly exceed it.
float upper_percentile(const float* values, std::int64_t n, float p);
float upper_percentile(const std::vector<float>& values, float p);

/// Fraction of entries with |x| > 1e-6 across all maps (f, s, s).
double conventional_sparsity_rate(const Tensor& maps);

/// Fraction of spatial locations where any channel has |x| > 1e-6.
double crosswise_sparsity_rate(const Tensor& maps);

/// One detected object: pixel coordinates plus the detection-map score.
struct Detection {
  int x = 0;
  int y = 0;
  float score = 0.0f;
};

/// Maps grid activations (D >= binarize_at) of a single-image detection map
/// to pixel centers: (col*grid_stride + off, row*grid_stride + off) with
/// off = grid_stride/2. Accepts any tensor whose trailing dims are (s, s).
std::vector<Detection> extract_detections(const Tensor& detection_map,
                                          float binarize_at, int grid_stride);

/// CSV serialization, one "x,y,score" line per detection (with header).
std::string detections_to_csv(const std::vector<Detection>& detections);

}  // namespace cscae
