#pragma once

#include <optional>
#include <string>

#include "higenet/autograd.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

// Per-forward state: whether dropout is active and the stream it draws from.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng rng{0};
};

// Binds parameters of one store into one tape.
struct Binder {
  Tape& tape;
  ParamStore& params;
  Var operator()(ParamId id) const { return tape.parameter(params, id); }
};

// y = x·W (+ b), W: [in×out].
struct Linear {
  ParamId weight = 0;
  std::optional<ParamId> bias;

  static Linear create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias,
                       Rng& rng);
  Var operator()(const Binder& bind, const Var& x) const;
};

// Conv along time with kernel [out×in×k], zero padding (k−1)/2.
struct Conv1d {
  ParamId kernel = 0;
  std::optional<ParamId> bias;
  std::size_t padding = 1;

  static Conv1d create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::size_t width,
                       bool with_bias, Rng& rng);
  Var operator()(const Binder& bind, const Var& x) const;
};

struct LayerNorm {
  ParamId gain = 0;
  ParamId bias = 0;

  static LayerNorm create(ParamStore& store, const std::string& name, std::size_t width);
  Var operator()(const Binder& bind, const Var& x) const;
};

// Position-wise two-layer network, width → hidden → width with ELU.
struct FeedForward {
  Linear expand;
  Linear project;

  static FeedForward create(ParamStore& store, const std::string& name, std::size_t width, std::size_t hidden,
                            Rng& rng);
  Var operator()(const Binder& bind, const Var& x) const;
};

}  // namespace higenet
