#include "cscae/layers.hpp"

#include <cmath>

#include "cscae/ops.hpp"

namespace cscae {

Tensor uniform_init(Shape shape, std::int64_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

Conv2d Conv2d::create(int in_ch, int out_ch, int k, int stride, Rng& rng,
                      const std::string& name) {
  Conv2d layer;
  const std::int64_t fan_in = static_cast<std::int64_t>(in_ch) * k * k;
  layer.weight = Parameter(name + ".w", uniform_init({out_ch, in_ch, k, k}, fan_in, rng));
  layer.bias = Parameter(name + ".b", Tensor::zeros({out_ch}));
  layer.stride = stride;
  return layer;
}

Var Conv2d::apply(Graph& g, Var x) {
  return ops::conv2d(g, x, weight.bind(g), bias.bind(g), stride, weight.name);
}

ConvTranspose2d ConvTranspose2d::create(int in_ch, int out_ch, int k, int up, Rng& rng,
                                        const std::string& name) {
  ConvTranspose2d layer;
  const std::int64_t fan_in = static_cast<std::int64_t>(in_ch) * k * k;
  layer.weight = Parameter(name + ".w", uniform_init({in_ch, out_ch, k, k}, fan_in, rng));
  layer.bias = Parameter(name + ".b", Tensor::zeros({out_ch}));
  layer.up = up;
  return layer;
}

Var ConvTranspose2d::apply(Graph& g, Var x) {
  return ops::conv_transpose2d(g, x, weight.bind(g), bias.bind(g), up, weight.name);
}

BatchNorm BatchNorm::create(int channels, const std::string& name) {
  BatchNorm bn;
  bn.gamma = Parameter(name + ".gamma", Tensor::full({channels}, 1.0f));
  bn.beta = Parameter(name + ".beta", Tensor::zeros({channels}));
  bn.running_mean = Tensor::zeros({channels});
  bn.running_var = Tensor::full({channels}, 1.0f);
  bn.name = name;
  return bn;
}

Var BatchNorm::apply(Graph& g, Var x, bool train) {
  return ops::batch_norm(g, x, gamma.bind(g), beta.bind(g), &running_mean,
                         &running_var, train, momentum, eps, name);
}

Stage Stage::make_conv(int in_ch, int out_ch, int k, int stride, Act act, Rng& rng,
                       const std::string& name) {
  Stage s;
  s.kind = Kind::Conv;
  s.act = act;
  s.conv = Conv2d::create(in_ch, out_ch, k, stride, rng, name);
  if (act != Act::Linear) s.bn = BatchNorm::create(out_ch, name + ".bn");
  return s;
}

Stage Stage::make_deconv(int in_ch, int out_ch, int k, int up, Act act, Rng& rng,
                         const std::string& name) {
  Stage s;
  s.kind = Kind::Deconv;
  s.act = act;
  s.deconv = ConvTranspose2d::create(in_ch, out_ch, k, up, rng, name);
  if (act != Act::Linear) s.bn = BatchNorm::create(out_ch, name + ".bn");
  return s;
}

Stage Stage::make_pool(int window) {
  Stage s;
  s.kind = Kind::Pool;
  s.act = Act::Linear;
  s.pool_window = window;
  return s;
}

Var Stage::apply(Graph& g, Var x, bool train) {
  Var y;
  switch (kind) {
    case Kind::Conv: y = conv.apply(g, x); break;
    case Kind::Deconv: y = deconv.apply(g, x); break;
    case Kind::Pool: return ops::avg_pool(g, x, pool_window);
  }
  if (act == Act::Linear) return y;
  y = bn.apply(g, y, train);
  if (act == Act::BnLrelu) y = ops::leaky_relu(g, y, lrelu_slope);
  return y;
}

int Stage::out_channels(int in_ch) const {
  switch (kind) {
    case Kind::Conv: return conv.out_channels();
    case Kind::Deconv: return deconv.out_channels();
    case Kind::Pool: return in_ch;
  }
  return in_ch;
}

void Stage::collect_params(std::vector<Parameter*>& out) {
  if (kind == Kind::Conv) {
    out.push_back(&conv.weight);
    out.push_back(&conv.bias);
  } else if (kind == Kind::Deconv) {
    out.push_back(&deconv.weight);
    out.push_back(&deconv.bias);
  } else {
    return;
  }
  if (act != Act::Linear) {
    out.push_back(&bn.gamma);
    out.push_back(&bn.beta);
  }
}

void Stage::collect_state(std::vector<std::pair<std::string, Tensor*>>& out) {
  if (kind == Kind::Conv) {
    out.emplace_back(conv.weight.name, &conv.weight.value);
    out.emplace_back(conv.bias.name, &conv.bias.value);
  } else if (kind == Kind::Deconv) {
    out.emplace_back(deconv.weight.name, &deconv.weight.value);
    out.emplace_back(deconv.bias.name, &deconv.bias.value);
  } else {
    return;
  }
  if (act != Act::Linear) {
    out.emplace_back(bn.gamma.name, &bn.gamma.value);
    out.emplace_back(bn.beta.name, &bn.beta.value);
    out.emplace_back(bn.name + ".running_mean", &bn.running_mean);
    out.emplace_back(bn.name + ".running_var", &bn.running_var);
  }
}

}  // namespace cscae
