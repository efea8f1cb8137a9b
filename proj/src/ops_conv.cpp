#include <cstring>
#include <vector>

#include "cscae/detail/convolution.hpp"
#include "cscae/ops.hpp"
#include "cscae/parallel.hpp"
#include "op_common.hpp"

namespace cscae::detail {

void im2col(const float* img, const ConvGeom& g, float* cols) {
  const int oh = g.out_h(), ow = g.out_w();
  const std::int64_t plane = static_cast<std::int64_t>(g.in_h) * g.in_w;
  const std::int64_t n = static_cast<std::int64_t>(oh) * ow;
  std::int64_t row = 0;
  for (int c = 0; c < g.channels; ++c) {
    const float* src = img + c * plane;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx, ++row) {
        float* dst = cols + row * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.in_h) {
            std::memset(dst + static_cast<std::int64_t>(oy) * ow, 0,
                        sizeof(float) * static_cast<std::size_t>(ow));
            continue;
          }
          const float* src_row = src + static_cast<std::int64_t>(iy) * g.in_w;
          float* dst_row = dst + static_cast<std::int64_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            dst_row[ox] = (ix < 0 || ix >= g.in_w) ? 0.0f : src_row[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, const ConvGeom& g, float* img) {
  const int oh = g.out_h(), ow = g.out_w();
  const std::int64_t plane = static_cast<std::int64_t>(g.in_h) * g.in_w;
  const std::int64_t n = static_cast<std::int64_t>(oh) * ow;
  std::int64_t row = 0;
  for (int c = 0; c < g.channels; ++c) {
    float* dst = img + c * plane;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx, ++row) {
        const float* src = cols + row * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.in_h) continue;
          float* dst_row = dst + static_cast<std::int64_t>(iy) * g.in_w;
          const float* src_row = src + static_cast<std::int64_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < g.in_w) dst_row[ix] += src_row[ox];
          }
        }
      }
    }
  }
}

// Per-thread patch-matrix scratch, reused across layers and steps.
float* conv_forward_scratch(std::int64_t n) {
  thread_local std::vector<float> buf;
  if (static_cast<std::int64_t>(buf.size()) < n) buf.resize(static_cast<std::size_t>(n));
  return buf.data();
}

Tensor conv_forward_raw(const Tensor& x, const Tensor& kernel, int stride) {
  const int batch = x.dim(0), in_ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int out_ch = kernel.dim(0), k = kernel.dim(2);
  ConvGeom geom{in_ch, h, w, k, stride, (k - 1) / 2};
  const int oh = geom.out_h(), ow = geom.out_w();
  const std::int64_t n = static_cast<std::int64_t>(oh) * ow;
  const std::int64_t ckk = static_cast<std::int64_t>(in_ch) * k * k;
  Tensor out({batch, out_ch, oh, ow});
  Eigen::Map<const MatrixRM> wm(kernel.data(), out_ch, ckk);
  parallel_chunks(batch, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t b = b0; b < b1; ++b) {
      float* cols = conv_forward_scratch(ckk * n);
      im2col(x.data() + b * in_ch * h * w, geom, cols);
      Eigen::Map<const MatrixRM> cm(cols, ckk, n);
      Eigen::Map<MatrixRM> om(out.data() + b * out_ch * n, out_ch, n);
      om.noalias() = wm * cm;
    }
  });
  return out;
}

Tensor conv_transpose_forward_raw(const Tensor& x, const Tensor& kernel, int up) {
  const int batch = x.dim(0), in_ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int out_ch = kernel.dim(1), k = kernel.dim(2);
  const int pad = (k - up) / 2;
  const int oh = up * h, ow = up * w;
  // Geometry of the adjoint cross-correlation (out image -> input grid).
  ConvGeom geom{out_ch, oh, ow, k, up, pad};
  const std::int64_t n = static_cast<std::int64_t>(h) * w;
  const std::int64_t okk = static_cast<std::int64_t>(out_ch) * k * k;
  Tensor out({batch, out_ch, oh, ow});
  Eigen::Map<const MatrixRM> wm(kernel.data(), in_ch, okk);
  parallel_chunks(batch, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t b = b0; b < b1; ++b) {
      float* cols = conv_forward_scratch(okk * n);
      Eigen::Map<const MatrixRM> xm(x.data() + b * in_ch * n, in_ch, n);
      Eigen::Map<MatrixRM> cm(cols, okk, n);
      cm.noalias() = wm.transpose() * xm;
      float* dst = out.data() + b * out_ch * oh * ow;
      std::memset(dst, 0, sizeof(float) * static_cast<std::size_t>(out_ch) * oh * ow);
      col2im_add(cols, geom, dst);
    }
  });
  return out;
}

}  // namespace cscae::detail

namespace cscae::ops {

namespace {

using detail::ConvGeom;
using detail::col2im_add;
using detail::im2col;

std::vector<float>& grad_scratch() {
  thread_local std::vector<float> buf;
  return buf;
}

float* grad_scratch_for(std::int64_t n) {
  auto& buf = grad_scratch();
  if (static_cast<std::int64_t>(buf.size()) < n) buf.resize(static_cast<std::size_t>(n));
  return buf.data();
}

struct Conv2dNode : Node {
  int stride;
  ConvGeom geom;

  Conv2dNode(Var x, Var kernel, Var bias, int stride_, const std::string& name)
      : stride(stride_) {
    label = name;
    require_rank(x, 4, label.c_str());
    require_rank(kernel, 4, label.c_str());
    const Tensor& xv = x.value();
    const Tensor& kv = kernel.value();
    const int k = kv.dim(2);
    if (kv.dim(2) != kv.dim(3))
      throw ShapeError(label + ": kernel must be square, got " + shape_str(kv.shape()));
    if (k % 2 == 0)
      throw ShapeError(label + ": same-padding requires an odd kernel, got " +
                       std::to_string(k));
    if (kv.dim(1) != xv.dim(1))
      throw ShapeError(label + ": input has " + std::to_string(xv.dim(1)) +
                       " channels but kernel expects " + std::to_string(kv.dim(1)));
    if (stride < 1 || xv.dim(2) % stride != 0 || xv.dim(3) % stride != 0)
      throw ShapeError(label + ": spatial dims " + std::to_string(xv.dim(2)) + "x" +
                       std::to_string(xv.dim(3)) + " not divisible by stride " +
                       std::to_string(stride));
    if (bias.value().rank() != 1 || bias.value().dim(0) != kv.dim(0))
      throw ShapeError(label + ": bias shape " + shape_str(bias.value().shape()) +
                       " does not match " + std::to_string(kv.dim(0)) + " filters");
    geom = ConvGeom{xv.dim(1), xv.dim(2), xv.dim(3), k, stride, (k - 1) / 2};
    inputs = {x.node(), kernel.node(), bias.node()};
  }

  void recompute() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& kernel = inputs[1]->val();
    const Tensor& bias = inputs[2]->val();
    const int batch = x.dim(0), out_ch = kernel.dim(0);
    const int oh = geom.out_h(), ow = geom.out_w();
    const std::int64_t n = static_cast<std::int64_t>(oh) * ow;
    const std::int64_t ckk =
        static_cast<std::int64_t>(geom.channels) * geom.kernel * geom.kernel;
    Tensor& out = prepare(value_, {batch, out_ch, oh, ow});
    Eigen::Map<const MatrixRM> wm(kernel.data(), out_ch, ckk);
    Eigen::Map<const Eigen::VectorXf> bv(bias.data(), out_ch);
    parallel_chunks(batch, [&](std::int64_t b0, std::int64_t b1) {
      for (std::int64_t b = b0; b < b1; ++b) {
        float* cols = detail::conv_forward_scratch(ckk * n);
        im2col(x.data() + b * geom.channels * geom.in_h * geom.in_w, geom, cols);
        Eigen::Map<const MatrixRM> cm(cols, ckk, n);
        Eigen::Map<MatrixRM> om(out.data() + b * out_ch * n, out_ch, n);
        om.noalias() = wm * cm;
        om.colwise() += bv;
      }
    });
  }

  void push_grad() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& kernel = inputs[1]->val();
    const Tensor& gy = grad();
    const int batch = x.dim(0), out_ch = kernel.dim(0);
    const std::int64_t n = static_cast<std::int64_t>(geom.out_h()) * geom.out_w();
    const std::int64_t ckk =
        static_cast<std::int64_t>(geom.channels) * geom.kernel * geom.kernel;
    const bool need_x = inputs[0]->requires_grad;
    const bool need_w = inputs[1]->requires_grad;
    const bool need_b = inputs[2]->requires_grad;
    if (need_x) inputs[0]->ensure_grad();
    if (need_w) inputs[1]->ensure_grad();
    if (need_b) inputs[2]->ensure_grad();
    Eigen::Map<const MatrixRM> wm(kernel.data(), out_ch, ckk);

    for (std::int64_t b = 0; b < batch; ++b) {
      Eigen::Map<const MatrixRM> gym(gy.data() + b * out_ch * n, out_ch, n);
      if (need_w || need_x) {
        float* cols = detail::conv_forward_scratch(ckk * n);
        if (need_w) {
          im2col(x.data() + b * geom.channels * geom.in_h * geom.in_w, geom, cols);
          Eigen::Map<const MatrixRM> cm(cols, ckk, n);
          Eigen::Map<MatrixRM> gwm(inputs[1]->grad().data(), out_ch, ckk);
          gwm.noalias() += gym * cm.transpose();
        }
        if (need_x) {
          float* dcols = grad_scratch_for(ckk * n);
          Eigen::Map<MatrixRM> dcm(dcols, ckk, n);
          dcm.noalias() = wm.transpose() * gym;
          col2im_add(dcols, geom,
                     inputs[0]->grad().data() + b * geom.channels * geom.in_h * geom.in_w);
        }
      }
      if (need_b) {
        Tensor& gb = inputs[2]->grad();
        for (int oc = 0; oc < out_ch; ++oc) {
          double acc = 0.0;
          const float* row = gy.data() + (b * out_ch + oc) * n;
          for (std::int64_t i = 0; i < n; ++i) acc += row[i];
          gb[oc] += static_cast<float>(acc);
        }
      }
    }
  }
};

struct ConvTranspose2dNode : Node {
  int up;
  ConvGeom geom;  // adjoint geometry: output image gathered back to the input grid

  ConvTranspose2dNode(Var x, Var kernel, Var bias, int up_, const std::string& name)
      : up(up_) {
    label = name;
    require_rank(x, 4, label.c_str());
    require_rank(kernel, 4, label.c_str());
    const Tensor& xv = x.value();
    const Tensor& kv = kernel.value();
    const int k = kv.dim(2);
    if (kv.dim(2) != kv.dim(3))
      throw ShapeError(label + ": kernel must be square, got " + shape_str(kv.shape()));
    if (kv.dim(0) != xv.dim(1))
      throw ShapeError(label + ": input has " + std::to_string(xv.dim(1)) +
                       " channels but kernel expects " + std::to_string(kv.dim(0)));
    if (up < 1 || k < up || (k - up) % 2 != 0)
      throw ShapeError(label + ": kernel " + std::to_string(k) +
                       " incompatible with upsample factor " + std::to_string(up) +
                       " (need k >= u and k - u even)");
    if (bias.value().rank() != 1 || bias.value().dim(0) != kv.dim(1))
      throw ShapeError(label + ": bias shape " + shape_str(bias.value().shape()) +
                       " does not match " + std::to_string(kv.dim(1)) + " filters");
    geom = ConvGeom{kv.dim(1), up * xv.dim(2), up * xv.dim(3), k, up, (k - up) / 2};
    inputs = {x.node(), kernel.node(), bias.node()};
  }

  void recompute() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& kernel = inputs[1]->val();
    const Tensor& bias = inputs[2]->val();
    const int batch = x.dim(0), in_ch = x.dim(1), out_ch = kernel.dim(1);
    const std::int64_t n = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    const std::int64_t okk =
        static_cast<std::int64_t>(out_ch) * geom.kernel * geom.kernel;
    const std::int64_t out_plane = static_cast<std::int64_t>(geom.in_h) * geom.in_w;
    Tensor& out = prepare(value_, {batch, out_ch, geom.in_h, geom.in_w});
    Eigen::Map<const MatrixRM> wm(kernel.data(), in_ch, okk);
    parallel_chunks(batch, [&](std::int64_t b0, std::int64_t b1) {
      for (std::int64_t b = b0; b < b1; ++b) {
        float* cols = detail::conv_forward_scratch(okk * n);
        Eigen::Map<const MatrixRM> xm(x.data() + b * in_ch * n, in_ch, n);
        Eigen::Map<MatrixRM> cm(cols, okk, n);
        cm.noalias() = wm.transpose() * xm;
        float* dst = out.data() + b * out_ch * out_plane;
        for (int oc = 0; oc < out_ch; ++oc) {
          float* plane = dst + oc * out_plane;
          const float bv = bias[oc];
          for (std::int64_t i = 0; i < out_plane; ++i) plane[i] = bv;
        }
        col2im_add(cols, geom, dst);
      }
    });
  }

  void push_grad() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& kernel = inputs[1]->val();
    const Tensor& gy = grad();
    const int batch = x.dim(0), in_ch = x.dim(1), out_ch = kernel.dim(1);
    const std::int64_t n = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    const std::int64_t okk =
        static_cast<std::int64_t>(out_ch) * geom.kernel * geom.kernel;
    const std::int64_t out_plane = static_cast<std::int64_t>(geom.in_h) * geom.in_w;
    const bool need_x = inputs[0]->requires_grad;
    const bool need_w = inputs[1]->requires_grad;
    const bool need_b = inputs[2]->requires_grad;
    if (need_x) inputs[0]->ensure_grad();
    if (need_w) inputs[1]->ensure_grad();
    if (need_b) inputs[2]->ensure_grad();
    Eigen::Map<const MatrixRM> wm(kernel.data(), in_ch, okk);

    for (std::int64_t b = 0; b < batch; ++b) {
      if (need_x || need_w) {
        float* dcols = grad_scratch_for(okk * n);
        im2col(gy.data() + b * out_ch * out_plane, geom, dcols);
        Eigen::Map<const MatrixRM> dcm(dcols, okk, n);
        if (need_x) {
          Eigen::Map<MatrixRM> gxm(inputs[0]->grad().data() + b * in_ch * n, in_ch, n);
          gxm.noalias() += wm * dcm;
        }
        if (need_w) {
          Eigen::Map<const MatrixRM> xm(x.data() + b * in_ch * n, in_ch, n);
          Eigen::Map<MatrixRM> gwm(inputs[1]->grad().data(), in_ch, okk);
          gwm.noalias() += xm * dcm.transpose();
        }
      }
      if (need_b) {
        Tensor& gb = inputs[2]->grad();
        for (int oc = 0; oc < out_ch; ++oc) {
          double acc = 0.0;
          const float* plane = gy.data() + (b * out_ch + oc) * out_plane;
          for (std::int64_t i = 0; i < out_plane; ++i) acc += plane[i];
          gb[oc] += static_cast<float>(acc);
        }
      }
    }
  }
};

struct AvgPoolNode : Node {
  int k;

  AvgPoolNode(Var x, int k_) : k(k_) {
    label = "avg_pool";
    require_rank(x, 4, label.c_str());
    const Tensor& xv = x.value();
    if (k < 1 || xv.dim(2) % k != 0 || xv.dim(3) % k != 0)
      throw ShapeError(label + ": spatial dims " + std::to_string(xv.dim(2)) + "x" +
                       std::to_string(xv.dim(3)) + " not divisible by window " +
                       std::to_string(k));
    inputs = {x.node()};
  }

  void recompute() override {
    const Tensor& x = inputs[0]->val();
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h / k, ow = w / k;
    Tensor& out = prepare(value_, {batch, ch, oh, ow});
    const float inv = 1.0f / static_cast<float>(k * k);
    parallel_chunks(static_cast<std::int64_t>(batch) * ch, [&](std::int64_t p0, std::int64_t p1) {
      for (std::int64_t p = p0; p < p1; ++p) {
        const float* src = x.data() + p * h * w;
        float* dst = out.data() + p * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            float acc = 0.0f;
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx)
                acc += src[(oy * k + dy) * w + ox * k + dx];
            dst[oy * ow + ox] = acc * inv;
          }
      }
    });
  }

  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    const Tensor& x = inputs[0]->val();
    const Tensor& gy = grad();
    Tensor& gx = inputs[0]->grad();
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h / k, ow = w / k;
    const float inv = 1.0f / static_cast<float>(k * k);
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(batch) * ch; ++p) {
      const float* gsrc = gy.data() + p * oh * ow;
      float* gdst = gx.data() + p * h * w;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const float v = gsrc[oy * ow + ox] * inv;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx)
              gdst[(oy * k + dy) * w + ox * k + dx] += v;
        }
    }
  }
};

}  // namespace

Var conv2d(Graph& g, Var x, Var kernel, Var bias, int stride, const std::string& label) {
  return g.make<Conv2dNode>(x, kernel, bias, stride, label);
}

Var conv_transpose2d(Graph& g, Var x, Var kernel, Var bias, int up,
                     const std::string& label) {
  return g.make<ConvTranspose2dNode>(x, kernel, bias, up, label);
}

Var avg_pool(Graph& g, Var x, int k) { return g.make<AvgPoolNode>(x, k); }

}  // namespace cscae::ops
