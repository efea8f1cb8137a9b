#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cscae/layers.hpp"
#include "cscae/sparsity.hpp"

namespace cscae {

/// Foreground gating variant: crosswise couples all channels through the
/// detection map; conventional thresholds each entry independently (the
/// ablation baseline); none removes the gate entirely.
enum class GateMode { crosswise, conventional, none };

/// Width/depth-scalable description of the network. Channel counts are the
/// full-size ones; width_scale multiplies every internal count (rounded to
/// the nearest integer, at least 1). Image channels and the one-channel
/// detection head are never scaled.
struct CaeConfig {
  int input_size = 100;
  int input_channels = 3;
  double width_scale = 1.0;
  int foreground_channels = 100;
  int background_channels = 5;
  int background_size = 5;
  int detection_grid = 25;
  SparsityGateConfig gate;
  GateMode gate_mode = GateMode::crosswise;

  void validate() const;
  /// max(1, round(base * width_scale))
  int scaled(int base_channels) const;
  int fg_channels() const { return scaled(foreground_channels); }
  int bg_channels() const { return scaled(background_channels); }
};

/// One row of the layer plan, mirroring the published table for reporting.
struct PlanRow {
  std::string part;
  std::string layer;   // Input / Conv / Pool / Deconv / Thres. / Filter.
  std::string kernel;  // "5x5" or "-"
  std::string stride;  // "1", "2", "0.5", "0.2", "-"
  int size = 0;        // spatial side of the output
  int channels = 0;
};

/// Expected output size of every row, derived from the config.
std::vector<PlanRow> table_plan(const CaeConfig& config);

struct ForwardOptions {
  /// Overrides the detection map with a constant (1 = identity gate,
  /// 0 = fully closed; exact zeros are substituted so downstream values do
  /// not depend on the input at all).
  std::optional<float> force_detection;
  /// Zeroes the background feature maps (bottleneck isolation probe).
  bool zero_background = false;
  /// When set, records (stage label, output shape) for every stage.
  std::vector<std::pair<std::string, Shape>>* trace = nullptr;
};

/// Everything one forward pass produces. Holds the tape, so gradients can be
/// pulled from it while it is alive.
struct CaeForward {
  Graph graph;
  Var input;
  Var dprime;        // detection head after batch norm (crosswise mode)
  Var detection;     // soft detection map in (0,1) (crosswise mode)
  Var xprime;        // dense foreground features
  Var gated;         // foreground features after the gate
  Var bg_features;   // background bottleneck maps
  Var fg_recon;
  Var bg_recon;
  Var reconstruction;
  float threshold_used = 0.0f;
  /// Materialized single-channel detection values: the soft map in crosswise
  /// mode, channel-occupancy of the gated maps otherwise.
  Tensor detection_values;
};

/// The two-branch autoencoder: shared trunk (part 1), detection head
/// (part 2), foreground features (part 3), background encoder (part 4),
/// thresholding (part 5), gating (part 6), and the two decoders
/// (parts 7 and 8). The reconstruction is the pixel-wise sum of the two
/// decoded images.
class CaeModel {
 public:
  static CaeModel build(const CaeConfig& config, std::uint64_t seed);

  const CaeConfig& config() const { return config_; }
  bool training() const { return train_; }
  void set_train(bool train) { train_ = train; }

  RunningThreshold& threshold() { return threshold_; }
  const RunningThreshold& threshold() const { return threshold_; }

  CaeForward forward(const Tensor& images, const ForwardOptions& opts = {});

  std::vector<Parameter*> parameters();
  /// Every tensor a checkpoint must carry: parameters, batch-norm running
  /// statistics, and the running threshold.
  std::vector<std::pair<std::string, Tensor*>> state();
  /// Restores state() entries from named tensors; rejects missing names and
  /// mismatched shapes.
  void load_state(const std::vector<std::pair<std::string, Tensor>>& entries);

  // Exposed for the classifier construction.
  std::vector<Stage>& part(int i) { return parts_[i - 1]; }

 private:
  CaeConfig config_;
  bool train_ = true;
  RunningThreshold threshold_;
  std::vector<Stage> parts_[8];  // parts 5/6 have no stages (threshold/gate ops)

  friend class ClassifierModel;
  struct Encoded {
    Var dprime, detection, xprime, gated, bg_features;
    float threshold_used = 0.0f;
    Tensor detection_values;
  };
  Encoded encode(Graph& g, Var x, const ForwardOptions& opts);
};

/// sqrt(mean((reconstruction - images)^2)) over batch, channels and pixels.
Var reconstruction_loss(Graph& g, Var reconstruction, const Tensor& images);

/// Supervised head on a trained CAE (parts 1-6 copied): four 1x1 conv layers
/// on the gated foreground and two 3x3 conv layers on the background
/// features, global average pooling of both branches, concatenation, and a
/// sigmoid output layer.
class ClassifierModel {
 public:
  static ClassifierModel build_from_cae(const CaeModel& cae, int num_outputs,
                                        std::uint64_t seed);

  struct Pass {
    Graph graph;
    Var logits;  // (b, num_outputs, 1, 1), pre-sigmoid
    Var probs;   // sigmoid(logits)
  };
  Pass forward(const Tensor& images);

  bool training() const { return train_; }
  void set_train(bool train) { train_ = train; }

  std::vector<Parameter*> parameters();      // all parameters
  std::vector<Parameter*> head_parameters(); // only the added layers
  std::vector<std::pair<std::string, Tensor*>> state();
  void load_state(const std::vector<std::pair<std::string, Tensor>>& entries);

  const CaeConfig& config() const { return config_; }
  std::vector<Stage>& part(int i) { return parts_[i - 1]; }

 private:
  CaeConfig config_;
  bool train_ = true;
  RunningThreshold threshold_;
  std::vector<Stage> parts_[4];  // copied parts 1-4
  std::vector<Stage> fg_head_;
  std::vector<Stage> bg_head_;
  Conv2d output_layer_;
};

}  // namespace cscae
