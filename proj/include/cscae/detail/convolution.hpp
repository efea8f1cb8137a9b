#pragma once

#include "cscae/tensor.hpp"

namespace cscae::detail {

/// Geometry of a 2-D cross-correlation with square kernel, symmetric zero
/// padding and integer stride. out = floor((in + 2*pad - k) / stride) + 1.
struct ConvGeom {
  int channels = 0;
  int in_h = 0, in_w = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
};

/// Gathers kernel-sized patches of a (channels, in_h, in_w) image into a
/// row-major (channels*k*k, out_h*out_w) patch matrix. Out-of-bounds taps
/// read zero.
void im2col(const float* img, const ConvGeom& g, float* cols);

/// Adjoint of im2col: scatter-adds a patch matrix back into a
/// (channels, in_h, in_w) image buffer. The buffer must be pre-zeroed when a
/// plain transpose (rather than accumulation) is wanted.
void col2im_add(const float* cols, const ConvGeom& g, float* img);

/// Bias-free cross-correlation of x (b, in_ch, h, w) with kernel
/// (out_ch, in_ch, k, k); same-padding pad = (k-1)/2 requires odd k.
/// Exposed for oracle tests; ops::conv2d builds on the same kernels.
Tensor conv_forward_raw(const Tensor& x, const Tensor& kernel, int stride);

/// Bias-free transposed convolution of x (b, in_ch, h, w) with kernel
/// (in_ch, out_ch, k, k) and integer upsampling factor u; output is exactly
/// (b, out_ch, u*h, u*w), which requires k >= u and (k - u) even.
Tensor conv_transpose_forward_raw(const Tensor& x, const Tensor& kernel, int up);

}  // namespace cscae::detail
