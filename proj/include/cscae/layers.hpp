#pragma once

#include <string>
#include <vector>

#include "cscae/graph.hpp"
#include "cscae/rng.hpp"

namespace cscae {

/// Named trainable tensor plus its accumulated gradient. Gradients persist
/// across backward sweeps; call zero_grad() between optimizer steps.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name_, Tensor value_)
      : name(std::move(name_)), value(std::move(value_)), grad(Tensor::zeros(value.shape())) {}

  void zero_grad() { grad.set_zero(); }
  Var bind(Graph& g) { return g.parameter(value, grad, name); }
};

/// Zero-mean uniform init scaled by 1/sqrt(fan_in); deterministic per stream.
Tensor uniform_init(Shape shape, std::int64_t fan_in, Rng& rng);

struct Conv2d {
  Parameter weight;  // (out_ch, in_ch, k, k)
  Parameter bias;    // (out_ch), zero-initialized
  int stride = 1;

  static Conv2d create(int in_ch, int out_ch, int k, int stride, Rng& rng,
                       const std::string& name);
  Var apply(Graph& g, Var x);
  int out_channels() const { return weight.value.dim(0); }
};

struct ConvTranspose2d {
  Parameter weight;  // (in_ch, out_ch, k, k)
  Parameter bias;    // (out_ch), zero-initialized
  int up = 1;

  static ConvTranspose2d create(int in_ch, int out_ch, int k, int up, Rng& rng,
                                const std::string& name);
  Var apply(Graph& g, Var x);
  int out_channels() const { return weight.value.dim(1); }
};

struct BatchNorm {
  Parameter gamma;  // ones
  Parameter beta;   // zeros
  Tensor running_mean;  // zeros
  Tensor running_var;   // ones
  float momentum = 0.1f;
  float eps = 1e-5f;
  std::string name;

  static BatchNorm create(int channels, const std::string& name);
  /// Train mode uses batch statistics and updates the running buffers.
  Var apply(Graph& g, Var x, bool train);
};

/// One network stage: a conv, transposed conv, or pooling row, optionally
/// followed by batch normalization and leaky ReLU.
struct Stage {
  enum class Kind { Conv, Deconv, Pool };
  enum class Act { BnLrelu, BnOnly, Linear };

  Kind kind = Kind::Conv;
  Act act = Act::BnLrelu;
  int pool_window = 0;
  Conv2d conv;
  ConvTranspose2d deconv;
  BatchNorm bn;
  float lrelu_slope = 0.01f;

  static Stage make_conv(int in_ch, int out_ch, int k, int stride, Act act, Rng& rng,
                         const std::string& name);
  static Stage make_deconv(int in_ch, int out_ch, int k, int up, Act act, Rng& rng,
                           const std::string& name);
  static Stage make_pool(int window);

  Var apply(Graph& g, Var x, bool train);
  int out_channels(int in_ch) const;
  void collect_params(std::vector<Parameter*>& out);
  void collect_state(std::vector<std::pair<std::string, Tensor*>>& out);
};

}  // namespace cscae
