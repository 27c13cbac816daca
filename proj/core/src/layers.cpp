#include "higenet/layers.hpp"

#include <cmath>

namespace higenet {

Linear Linear::create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias,
                      Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  Linear l;
  l.weight = store.add(name + ".weight", Tensor::uniform({in, out}, bound, rng));
  if (with_bias) l.bias = store.add(name + ".bias", Tensor::uniform({out}, bound, rng));
  return l;
}

Var Linear::operator()(const Binder& bind, const Var& x) const {
  Var y = matmul(x, bind(weight));
  if (bias) y = add_bias(y, bind(*bias));
  return y;
}

Conv1d Conv1d::create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::size_t width,
                      bool with_bias, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in * width));
  Conv1d c;
  c.kernel = store.add(name + ".kernel", Tensor::uniform({out, in, width}, bound, rng));
  if (with_bias) c.bias = store.add(name + ".bias", Tensor::uniform({out}, bound, rng));
  c.padding = (width - 1) / 2;
  return c;
}

Var Conv1d::operator()(const Binder& bind, const Var& x) const {
  std::optional<Var> b;
  if (bias) b = bind(*bias);
  return conv1d_time(x, bind(kernel), padding, b);
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, std::size_t width) {
  LayerNorm n;
  n.gain = store.add(name + ".gain", Tensor({width}, 1.0));
  n.bias = store.add(name + ".bias", Tensor({width}, 0.0));
  return n;
}

Var LayerNorm::operator()(const Binder& bind, const Var& x) const { return layer_norm(x, bind(gain), bind(bias)); }

FeedForward FeedForward::create(ParamStore& store, const std::string& name, std::size_t width, std::size_t hidden,
                                Rng& rng) {
  return {Linear::create(store, name + ".expand", width, hidden, true, rng),
          Linear::create(store, name + ".project", hidden, width, true, rng)};
}

Var FeedForward::operator()(const Binder& bind, const Var& x) const {
  return project(bind, elu(expand(bind, x)));
}

}  // namespace higenet
