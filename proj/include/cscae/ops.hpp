#pragma once

#include <string>

#include "cscae/graph.hpp"

namespace cscae::ops {

// Elementwise arithmetic (operands must share a shape).
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var add_const(Graph& g, Var a, float c);
Var scale(Graph& g, Var a, float c);

// Elementwise nonlinearities.
Var relu(Graph& g, Var a);
Var leaky_relu(Graph& g, Var a, float negative_slope = 0.01f);
Var sigmoid(Graph& g, Var a);

// Reductions to a scalar (fixed-order, double-accumulated sums).
Var sum(Graph& g, Var a);
Var mean(Graph& g, Var a);
/// sqrt(mean((pred - target)^2)) over every element.
Var rmse(Graph& g, Var pred, Var target);
/// Mean binary cross-entropy on pre-sigmoid logits (numerically stable).
Var bce_with_logits(Graph& g, Var logits, Var targets);

/// Cross-correlation with same-padding: x (b,c,h,w), kernel (out_ch,c,k,k)
/// with odd k, bias (out_ch). Spatial dims must be divisible by stride.
Var conv2d(Graph& g, Var x, Var kernel, Var bias, int stride = 1,
           const std::string& label = "conv2d");

/// Transposed convolution: x (b,c,h,w), kernel (c,out_ch,k,k), bias (out_ch);
/// output spatial size is exactly up * input (fractional stride 1/up).
Var conv_transpose2d(Graph& g, Var x, Var kernel, Var bias, int up = 1,
                     const std::string& label = "deconv");

/// k x k mean pooling with stride k; spatial dims must divide by k.
Var avg_pool(Graph& g, Var x, int k);

/// Mean over the spatial dims: (b,c,h,w) -> (b,c,1,1).
Var global_avg_pool(Graph& g, Var x);

/// Per-channel batch normalization. Train mode normalizes with batch
/// statistics (batch size >= 2) and updates the running buffers in place;
/// eval mode uses the running buffers. Differentiable w.r.t. x, gamma, beta.
Var batch_norm(Graph& g, Var x, Var gamma, Var beta, Tensor* running_mean,
               Tensor* running_var, bool train, float momentum = 0.1f,
               float eps = 1e-5f, const std::string& label = "batch_norm");

/// Broadcast gate: x (b,f,s,s) multiplied by d (b,1,s,s) across channels.
/// Gradient flows to both operands.
Var mul_channels(Graph& g, Var x, Var d);

/// sigmoid(slope * (x - threshold)); the threshold is a constant (no
/// gradient flows into it).
Var soft_binarize(Graph& g, Var x, float threshold, float slope);

/// Concatenation along the channel axis of two NCHW tensors.
Var concat_channels(Graph& g, Var a, Var b);

}  // namespace cscae::ops
