#include <cmath>
#include <cstring>
#include <vector>

#include "cscae/ops.hpp"
#include "cscae/parallel.hpp"
#include "op_common.hpp"

namespace cscae::ops {

namespace {

struct BatchNormNode : Node {
  Tensor* run_mean;
  Tensor* run_var;
  bool train;
  float momentum, eps;
  Tensor xhat;              // cached normalized input
  std::vector<float> inv;   // cached per-channel 1/sqrt(var + eps)

  BatchNormNode(Var x, Var gamma, Var beta, Tensor* rm, Tensor* rv, bool train_,
                float momentum_, float eps_, const std::string& name)
      : run_mean(rm), run_var(rv), train(train_), momentum(momentum_), eps(eps_) {
    label = name;
    require_rank(x, 4, label.c_str());
    const int ch = x.value().dim(1);
    if (gamma.value().numel() != ch || beta.value().numel() != ch)
      throw ShapeError(label + ": gamma/beta must have " + std::to_string(ch) + " entries");
    if (run_mean->numel() != ch || run_var->numel() != ch)
      throw ShapeError(label + ": running stats must have " + std::to_string(ch) + " entries");
    if (train && x.value().dim(0) < 2)
      throw ConfigError(label + ": train mode requires batch size >= 2, got " +
                        std::to_string(x.value().dim(0)));
    inputs = {x.node(), gamma.node(), beta.node()};
  }

  void recompute() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& gamma = inputs[1]->val();
    const Tensor& beta = inputs[2]->val();
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t m = static_cast<std::int64_t>(batch) * plane;
    prepare(value_, x.shape());
    prepare(xhat, x.shape());
    inv.assign(static_cast<std::size_t>(ch), 0.0f);

    parallel_chunks(ch, [&](std::int64_t c0, std::int64_t c1) {
      for (std::int64_t c = c0; c < c1; ++c) {
        float mu, iv;
        if (train) {
          double sum = 0.0;
          for (int b = 0; b < batch; ++b) {
            const float* src = x.data() + (b * ch + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) sum += src[i];
          }
          mu = static_cast<float>(sum / static_cast<double>(m));
          double sq = 0.0;
          for (int b = 0; b < batch; ++b) {
            const float* src = x.data() + (b * ch + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              const double d = static_cast<double>(src[i]) - mu;
              sq += d * d;
            }
          }
          const float var = static_cast<float>(sq / static_cast<double>(m));
          iv = 1.0f / std::sqrt(var + eps);
          (*run_mean)[c] = (1.0f - momentum) * (*run_mean)[c] + momentum * mu;
          (*run_var)[c] = (1.0f - momentum) * (*run_var)[c] + momentum * var;
        } else {
          mu = (*run_mean)[c];
          iv = 1.0f / std::sqrt((*run_var)[c] + eps);
        }
        inv[static_cast<std::size_t>(c)] = iv;
        const float gc = gamma[c], bc = beta[c];
        for (int b = 0; b < batch; ++b) {
          const float* src = x.data() + (b * ch + c) * plane;
          float* xh = xhat.data() + (b * ch + c) * plane;
          float* dst = value_.data() + (b * ch + c) * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            xh[i] = (src[i] - mu) * iv;
            dst[i] = gc * xh[i] + bc;
          }
        }
      }
    });
  }

  void push_grad() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& gamma = inputs[1]->val();
    const Tensor& gy = grad();
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t m = static_cast<std::int64_t>(batch) * plane;
    const bool need_x = inputs[0]->requires_grad;
    const bool need_g = inputs[1]->requires_grad;
    const bool need_b = inputs[2]->requires_grad;
    if (need_x) inputs[0]->ensure_grad();
    if (need_g) inputs[1]->ensure_grad();
    if (need_b) inputs[2]->ensure_grad();

    for (int c = 0; c < ch; ++c) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int b = 0; b < batch; ++b) {
        const float* gyp = gy.data() + (b * ch + c) * plane;
        const float* xhp = xhat.data() + (b * ch + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          sum_gy += gyp[i];
          sum_gy_xhat += static_cast<double>(gyp[i]) * xhp[i];
        }
      }
      if (need_g) inputs[1]->grad()[c] += static_cast<float>(sum_gy_xhat);
      if (need_b) inputs[2]->grad()[c] += static_cast<float>(sum_gy);
      if (!need_x) continue;
      const float gc = gamma[c];
      const float iv = inv[static_cast<std::size_t>(c)];
      if (train) {
        const float k1 = gc * iv / static_cast<float>(m);
        const float mg = static_cast<float>(sum_gy);
        const float mgx = static_cast<float>(sum_gy_xhat);
        for (int b = 0; b < batch; ++b) {
          const float* gyp = gy.data() + (b * ch + c) * plane;
          const float* xhp = xhat.data() + (b * ch + c) * plane;
          float* gxp = inputs[0]->grad().data() + (b * ch + c) * plane;
          for (std::int64_t i = 0; i < plane; ++i)
            gxp[i] += k1 * (static_cast<float>(m) * gyp[i] - mg - xhp[i] * mgx);
        }
      } else {
        const float k = gc * iv;
        for (int b = 0; b < batch; ++b) {
          const float* gyp = gy.data() + (b * ch + c) * plane;
          float* gxp = inputs[0]->grad().data() + (b * ch + c) * plane;
          for (std::int64_t i = 0; i < plane; ++i) gxp[i] += k * gyp[i];
        }
      }
    }
  }
};

struct MulChannelsNode : Node {
  MulChannelsNode(Var x, Var d) {
    label = "gate";
    require_rank(x, 4, label.c_str());
    require_rank(d, 4, label.c_str());
    const Tensor& xv = x.value();
    const Tensor& dv = d.value();
    if (dv.dim(1) != 1)
      throw ShapeError(label + ": detection map must have one channel, got " +
                       shape_str(dv.shape()));
    if (dv.dim(0) != xv.dim(0) || dv.dim(2) != xv.dim(2) || dv.dim(3) != xv.dim(3))
      throw ShapeError(label + ": spatial dims of features " + shape_str(xv.shape()) +
                       " and detection map " + shape_str(dv.shape()) + " disagree");
    inputs = {x.node(), d.node()};
  }

  void recompute() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& d = inputs[1]->val();
    const int batch = x.dim(0), f = x.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    Tensor& out = prepare(value_, x.shape());
    parallel_chunks(static_cast<std::int64_t>(batch) * f, [&](std::int64_t p0, std::int64_t p1) {
      for (std::int64_t p = p0; p < p1; ++p) {
        const std::int64_t b = p / f;
        const float* xp = x.data() + p * plane;
        const float* dp = d.data() + b * plane;
        float* yp = out.data() + p * plane;
        for (std::int64_t i = 0; i < plane; ++i) yp[i] = xp[i] * dp[i];
      }
    });
  }

  void push_grad() override {
    const Tensor& x = inputs[0]->val();
    const Tensor& d = inputs[1]->val();
    const Tensor& gy = grad();
    const int batch = x.dim(0), f = x.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    if (inputs[0]->requires_grad) {
      inputs[0]->ensure_grad();
      Tensor& gx = inputs[0]->grad();
      for (std::int64_t p = 0; p < static_cast<std::int64_t>(batch) * f; ++p) {
        const std::int64_t b = p / f;
        const float* gyp = gy.data() + p * plane;
        const float* dp = d.data() + b * plane;
        float* gxp = gx.data() + p * plane;
        for (std::int64_t i = 0; i < plane; ++i) gxp[i] += gyp[i] * dp[i];
      }
    }
    if (inputs[1]->requires_grad) {
      inputs[1]->ensure_grad();
      Tensor& gd = inputs[1]->grad();
      for (int b = 0; b < batch; ++b) {
        float* gdp = gd.data() + b * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          double acc = 0.0;
          for (int l = 0; l < f; ++l) {
            const std::int64_t off = (static_cast<std::int64_t>(b) * f + l) * plane + i;
            acc += static_cast<double>(gy[off]) * x[off];
          }
          gdp[i] += static_cast<float>(acc);
        }
      }
    }
  }
};

struct SoftBinarizeNode : Node {
  float t, r;
  SoftBinarizeNode(Var x, float t_, float r_) : t(t_), r(r_) {
    label = "soft_binarize";
    if (!std::isfinite(t)) throw NumericError(label + ": threshold is not finite");
    inputs = {x.node()};
  }
  void recompute() override {
    const Tensor& x = inputs[0]->val();
    Tensor& y = prepare(value_, x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i)
      y[i] = 1.0f / (1.0f + std::exp(-r * (x[i] - t)));
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    Tensor& gx = inputs[0]->grad();
    const Tensor& gy = grad();
    for (std::int64_t i = 0; i < value_.numel(); ++i)
      gx[i] += gy[i] * r * value_[i] * (1.0f - value_[i]);
  }
};

struct GlobalAvgPoolNode : Node {
  explicit GlobalAvgPoolNode(Var x) {
    label = "global_avg_pool";
    require_rank(x, 4, label.c_str());
    inputs = {x.node()};
  }
  void recompute() override {
    const Tensor& x = inputs[0]->val();
    const int batch = x.dim(0), ch = x.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    Tensor& out = prepare(value_, {batch, ch, 1, 1});
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(batch) * ch; ++p) {
      double acc = 0.0;
      const float* src = x.data() + p * plane;
      for (std::int64_t i = 0; i < plane; ++i) acc += src[i];
      out[p] = static_cast<float>(acc / static_cast<double>(plane));
    }
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    const Tensor& x = inputs[0]->val();
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    const Tensor& gy = grad();
    Tensor& gx = inputs[0]->grad();
    const float inv = 1.0f / static_cast<float>(plane);
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(x.dim(0)) * x.dim(1); ++p) {
      const float v = gy[p] * inv;
      float* dst = gx.data() + p * plane;
      for (std::int64_t i = 0; i < plane; ++i) dst[i] += v;
    }
  }
};

struct ConcatChannelsNode : Node {
  ConcatChannelsNode(Var a, Var b) {
    label = "concat_channels";
    require_rank(a, 4, label.c_str());
    require_rank(b, 4, label.c_str());
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) || av.dim(3) != bv.dim(3))
      throw ShapeError(label + ": shapes " + shape_str(av.shape()) + " and " +
                       shape_str(bv.shape()) + " only differ in channels");
    inputs = {a.node(), b.node()};
  }
  void recompute() override {
    const Tensor& a = inputs[0]->val();
    const Tensor& b = inputs[1]->val();
    const int batch = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(a.dim(2)) * a.dim(3);
    Tensor& out = prepare(value_, {batch, ca + cb, a.dim(2), a.dim(3)});
    for (int n = 0; n < batch; ++n) {
      std::memcpy(out.data() + (static_cast<std::int64_t>(n) * (ca + cb)) * plane,
                  a.data() + static_cast<std::int64_t>(n) * ca * plane,
                  sizeof(float) * static_cast<std::size_t>(ca * plane));
      std::memcpy(out.data() + (static_cast<std::int64_t>(n) * (ca + cb) + ca) * plane,
                  b.data() + static_cast<std::int64_t>(n) * cb * plane,
                  sizeof(float) * static_cast<std::size_t>(cb * plane));
    }
  }
  void push_grad() override {
    const Tensor& a = inputs[0]->val();
    const Tensor& b = inputs[1]->val();
    const int batch = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(a.dim(2)) * a.dim(3);
    const Tensor& gy = grad();
    for (int slot = 0; slot < 2; ++slot) {
      if (!inputs[slot]->requires_grad) continue;
      inputs[slot]->ensure_grad();
      Tensor& gi = inputs[slot]->grad();
      const int c = slot == 0 ? ca : cb;
      const int off = slot == 0 ? 0 : ca;
      for (int n = 0; n < batch; ++n) {
        const float* src = gy.data() + (static_cast<std::int64_t>(n) * (ca + cb) + off) * plane;
        float* dst = gi.data() + static_cast<std::int64_t>(n) * c * plane;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(c) * plane; ++i)
          dst[i] += src[i];
      }
    }
  }
};

}  // namespace

Var batch_norm(Graph& g, Var x, Var gamma, Var beta, Tensor* running_mean,
               Tensor* running_var, bool train, float momentum, float eps,
               const std::string& label) {
  return g.make<BatchNormNode>(x, gamma, beta, running_mean, running_var, train,
                               momentum, eps, label);
}

Var mul_channels(Graph& g, Var x, Var d) { return g.make<MulChannelsNode>(x, d); }

Var soft_binarize(Graph& g, Var x, float threshold, float slope) {
  return g.make<SoftBinarizeNode>(x, threshold, slope);
}

Var global_avg_pool(Graph& g, Var x) { return g.make<GlobalAvgPoolNode>(x); }

Var concat_channels(Graph& g, Var a, Var b) {
  return g.make<ConcatChannelsNode>(a, b);
}

}  // namespace cscae::ops
