#include "cscae/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cscae/errors.hpp"

namespace cscae {

namespace {
constexpr float kNonzeroTol = 1e-6f;
}

void SparsityGateConfig::validate() const {
  if (!(r > 0.0f)) throw ConfigError("gate slope r must be positive");
  if (!(p > 0.0f && p < 100.0f)) throw ConfigError("sparsity rate p must be in (0, 100)");
  if (!(alpha > 0.0f && alpha <= 1.0f)) throw ConfigError("alpha must be in (0, 1]");
}

void RunningThreshold::update(float batch_percentile, float alpha) {
  if (!std::isfinite(batch_percentile))
    throw NumericError("running threshold update with non-finite percentile");
  if (!initialized) {
    t = batch_percentile;
    initialized = true;
  } else {
    t = (1.0f - alpha) * t + alpha * batch_percentile;
  }
}

float upper_percentile(const float* values, std::int64_t n, float p) {
  if (n <= 0) throw ConfigError("upper_percentile: empty input");
  if (!(p > 0.0f && p < 100.0f))
    throw ConfigError("upper_percentile: p must be in (0, 100)");
  std::vector<float> sorted(values, values + n);
  const double rank = std::ceil((1.0 - static_cast<double>(p) / 100.0) *
                                static_cast<double>(n));
  std::int64_t idx = static_cast<std::int64_t>(rank) - 1;  // 1-based -> 0-based
  idx = std::clamp<std::int64_t>(idx, 0, n - 1);
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  return sorted[static_cast<std::size_t>(idx)];
}

float upper_percentile(const std::vector<float>& values, float p) {
  return upper_percentile(values.data(), static_cast<std::int64_t>(values.size()), p);
}

double conventional_sparsity_rate(const Tensor& maps) {
  std::int64_t nonzero = 0;
  for (std::int64_t i = 0; i < maps.numel(); ++i)
    if (std::fabs(maps[i]) > kNonzeroTol) ++nonzero;
  return maps.numel() == 0 ? 0.0
                           : static_cast<double>(nonzero) / static_cast<double>(maps.numel());
}

double crosswise_sparsity_rate(const Tensor& maps) {
  if (maps.rank() < 3)
    throw ShapeError("crosswise_sparsity_rate: expected (f, s, s) maps, got " +
                     shape_str(maps.shape()));
  const int w = maps.dim(maps.rank() - 1);
  const int h = maps.dim(maps.rank() - 2);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const std::int64_t channels = maps.numel() / plane;
  std::int64_t occupied = 0;
  for (std::int64_t i = 0; i < plane; ++i) {
    for (std::int64_t l = 0; l < channels; ++l) {
      if (std::fabs(maps[l * plane + i]) > kNonzeroTol) {
        ++occupied;
        break;
      }
    }
  }
  return static_cast<double>(occupied) / static_cast<double>(plane);
}

std::vector<Detection> extract_detections(const Tensor& detection_map,
                                          float binarize_at, int grid_stride) {
  if (detection_map.rank() < 2)
    throw ShapeError("extract_detections: expected trailing (s, s) dims, got " +
                     shape_str(detection_map.shape()));
  const int w = detection_map.dim(detection_map.rank() - 1);
  const int h = detection_map.dim(detection_map.rank() - 2);
  if (static_cast<std::int64_t>(w) * h != detection_map.numel())
    throw ShapeError("extract_detections: expected a single-image map, got " +
                     shape_str(detection_map.shape()));
  const int offset = grid_stride / 2;
  std::vector<Detection> out;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const float score = detection_map[static_cast<std::int64_t>(row) * w + col];
      if (score >= binarize_at)
        out.push_back({col * grid_stride + offset, row * grid_stride + offset, score});
    }
  }
  return out;
}

std::string detections_to_csv(const std::vector<Detection>& detections) {
  std::string out = "x,y,score\n";
  char line[64];
  for (const Detection& d : detections) {
    std::snprintf(line, sizeof(line), "%d,%d,%.6f\n", d.x, d.y, static_cast<double>(d.score));
    out += line;
  }
  return out;
}

}  // namespace cscae
