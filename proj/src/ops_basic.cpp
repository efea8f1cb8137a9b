#include <cmath>

#include "cscae/ops.hpp"
#include "op_common.hpp"

namespace cscae::ops {

namespace {

struct BinaryNode : Node {
  BinaryNode(Var a, Var b, const char* name) {
    require_same_shape(a, b, name);
    inputs = {a.node(), b.node()};
    label = name;
  }
  const Tensor& a() const { return inputs[0]->val(); }
  const Tensor& b() const { return inputs[1]->val(); }
};

struct AddNode : BinaryNode {
  AddNode(Var a, Var b) : BinaryNode(a, b, "add") {}
  void recompute() override {
    prepare(value_, a().shape()).array() = a().array() + b().array();
  }
  void push_grad() override {
    for (Node* in : inputs) {
      if (!in->requires_grad) continue;
      in->ensure_grad();
      in->grad().array() += grad().array();
    }
  }
};

struct SubNode : BinaryNode {
  SubNode(Var a, Var b) : BinaryNode(a, b, "sub") {}
  void recompute() override {
    prepare(value_, a().shape()).array() = a().array() - b().array();
  }
  void push_grad() override {
    if (inputs[0]->requires_grad) {
      inputs[0]->ensure_grad();
      inputs[0]->grad().array() += grad().array();
    }
    if (inputs[1]->requires_grad) {
      inputs[1]->ensure_grad();
      inputs[1]->grad().array() -= grad().array();
    }
  }
};

struct MulNode : BinaryNode {
  MulNode(Var a, Var b) : BinaryNode(a, b, "mul") {}
  void recompute() override {
    prepare(value_, a().shape()).array() = a().array() * b().array();
  }
  void push_grad() override {
    if (inputs[0]->requires_grad) {
      inputs[0]->ensure_grad();
      inputs[0]->grad().array() += grad().array() * b().array();
    }
    if (inputs[1]->requires_grad) {
      inputs[1]->ensure_grad();
      inputs[1]->grad().array() += grad().array() * a().array();
    }
  }
};

struct AddConstNode : Node {
  float c;
  AddConstNode(Var a, float c_) : c(c_) {
    inputs = {a.node()};
    label = "add_const";
  }
  void recompute() override {
    prepare(value_, inputs[0]->val().shape()).array() = inputs[0]->val().array() + c;
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    inputs[0]->grad().array() += grad().array();
  }
};

struct ScaleNode : Node {
  float c;
  ScaleNode(Var a, float c_) : c(c_) {
    inputs = {a.node()};
    label = "scale";
  }
  void recompute() override {
    prepare(value_, inputs[0]->val().shape()).array() = inputs[0]->val().array() * c;
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    inputs[0]->grad().array() += grad().array() * c;
  }
};

struct ReluNode : Node {
  explicit ReluNode(Var a) {
    inputs = {a.node()};
    label = "relu";
  }
  void recompute() override {
    prepare(value_, inputs[0]->val().shape()).array() = inputs[0]->val().array().max(0.0f);
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    const Tensor& x = inputs[0]->val();
    Tensor& gx = inputs[0]->grad();
    const Tensor& gy = grad();
    for (std::int64_t i = 0; i < x.numel(); ++i)
      if (x[i] > 0.0f) gx[i] += gy[i];
  }
};

struct LeakyReluNode : Node {
  float slope;
  LeakyReluNode(Var a, float slope_) : slope(slope_) {
    inputs = {a.node()};
    label = "leaky_relu";
  }
  void recompute() override {
    const Tensor& x = inputs[0]->val();
    Tensor& y = prepare(value_, x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i)
      y[i] = x[i] >= 0.0f ? x[i] : slope * x[i];
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    const Tensor& x = inputs[0]->val();
    Tensor& gx = inputs[0]->grad();
    const Tensor& gy = grad();
    for (std::int64_t i = 0; i < x.numel(); ++i)
      gx[i] += x[i] >= 0.0f ? gy[i] : slope * gy[i];
  }
};

struct SigmoidNode : Node {
  explicit SigmoidNode(Var a) {
    inputs = {a.node()};
    label = "sigmoid";
  }
  void recompute() override {
    const Tensor& x = inputs[0]->val();
    Tensor& y = prepare(value_, x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i)
      y[i] = 1.0f / (1.0f + std::exp(-x[i]));
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    Tensor& gx = inputs[0]->grad();
    const Tensor& gy = grad();
    for (std::int64_t i = 0; i < value_.numel(); ++i)
      gx[i] += gy[i] * value_[i] * (1.0f - value_[i]);
  }
};

struct SumNode : Node {
  explicit SumNode(Var a) {
    inputs = {a.node()};
    label = "sum";
  }
  void recompute() override {
    const Tensor& x = inputs[0]->val();
    double acc = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) acc += x[i];
    prepare(value_, {1})[0] = static_cast<float>(acc);
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    inputs[0]->grad().array() += grad()[0];
  }
};

struct MeanNode : Node {
  explicit MeanNode(Var a) {
    inputs = {a.node()};
    label = "mean";
  }
  void recompute() override {
    const Tensor& x = inputs[0]->val();
    double acc = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) acc += x[i];
    prepare(value_, {1})[0] = static_cast<float>(acc / static_cast<double>(x.numel()));
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    inputs[0]->grad().array() +=
        grad()[0] / static_cast<float>(inputs[0]->val().numel());
  }
};

struct RmseNode : BinaryNode {
  RmseNode(Var pred, Var target) : BinaryNode(pred, target, "rmse") {}
  void recompute() override {
    const Tensor& p = a();
    const Tensor& t = b();
    double acc = 0.0;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
      acc += d * d;
    }
    prepare(value_, {1})[0] =
        static_cast<float>(std::sqrt(acc / static_cast<double>(p.numel())));
  }
  void push_grad() override {
    const Tensor& p = a();
    const Tensor& t = b();
    const float y = std::max(value_[0], 1e-12f);
    const float c = grad()[0] / (y * static_cast<float>(p.numel()));
    if (inputs[0]->requires_grad) {
      inputs[0]->ensure_grad();
      Tensor& gp = inputs[0]->grad();
      for (std::int64_t i = 0; i < p.numel(); ++i) gp[i] += c * (p[i] - t[i]);
    }
    if (inputs[1]->requires_grad) {
      inputs[1]->ensure_grad();
      Tensor& gt = inputs[1]->grad();
      for (std::int64_t i = 0; i < p.numel(); ++i) gt[i] -= c * (p[i] - t[i]);
    }
  }
};

struct BceLogitsNode : BinaryNode {
  BceLogitsNode(Var logits, Var targets) : BinaryNode(logits, targets, "bce_with_logits") {}
  void recompute() override {
    const Tensor& z = a();
    const Tensor& y = b();
    double acc = 0.0;
    for (std::int64_t i = 0; i < z.numel(); ++i) {
      const double zi = z[i], yi = y[i];
      acc += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
    }
    prepare(value_, {1})[0] = static_cast<float>(acc / static_cast<double>(z.numel()));
  }
  void push_grad() override {
    if (!inputs[0]->requires_grad) return;
    inputs[0]->ensure_grad();
    const Tensor& z = a();
    const Tensor& y = b();
    Tensor& gz = inputs[0]->grad();
    const float c = grad()[0] / static_cast<float>(z.numel());
    for (std::int64_t i = 0; i < z.numel(); ++i) {
      const float s = 1.0f / (1.0f + std::exp(-z[i]));
      gz[i] += c * (s - y[i]);
    }
  }
};

}  // namespace

Var add(Graph& g, Var a, Var b) { return g.make<AddNode>(a, b); }
Var sub(Graph& g, Var a, Var b) { return g.make<SubNode>(a, b); }
Var mul(Graph& g, Var a, Var b) { return g.make<MulNode>(a, b); }
Var add_const(Graph& g, Var a, float c) { return g.make<AddConstNode>(a, c); }
Var scale(Graph& g, Var a, float c) { return g.make<ScaleNode>(a, c); }
Var relu(Graph& g, Var a) { return g.make<ReluNode>(a); }
Var leaky_relu(Graph& g, Var a, float negative_slope) {
  return g.make<LeakyReluNode>(a, negative_slope);
}
Var sigmoid(Graph& g, Var a) { return g.make<SigmoidNode>(a); }
Var sum(Graph& g, Var a) { return g.make<SumNode>(a); }
Var mean(Graph& g, Var a) { return g.make<MeanNode>(a); }
Var rmse(Graph& g, Var pred, Var target) { return g.make<RmseNode>(pred, target); }
Var bce_with_logits(Graph& g, Var logits, Var targets) {
  return g.make<BceLogitsNode>(logits, targets);
}

}  // namespace cscae::ops
