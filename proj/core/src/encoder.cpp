#include "higenet/encoder.hpp"

#include <stdexcept>

namespace higenet {

std::string_view distill_kind_name(DistillKind kind) {
  return kind == DistillKind::higenet ? "higenet" : "informer_maxpool";
}

DistillParams DistillParams::create(ParamStore& store, const std::string& name, std::size_t d_model, Rng& rng) {
  DistillParams p;
  p.conv = Conv1d::create(store, name + ".conv", d_model, d_model, 3, true, rng);
  p.gamma = store.add(name + ".gamma", Tensor({1}, 1.0));
  return p;
}

Var conv_elu_feature(const Binder& bind, const Var& x, const DistillParams& params) {
  return elu(params.conv(bind, x));
}

Var distill_step(const Binder& bind, const Var& x, const DistillParams& params, DistillKind kind) {
  if (x.rows() < 2) throw std::invalid_argument("cannot distill length-1 sequence");
  Var features = conv_elu_feature(bind, x, params);
  Var out = pool1d(features, kDistillMaxPool);
  if (kind == DistillKind::higenet) {
    out = add(out, scale_by(pool1d(features, kDistillAvgPool), bind(params.gamma)));
    out = add(out, pool1d(x, kDistillAvgPool));
  }
  return out;
}

Var maybe_dropout(const Var& x, ForwardContext& ctx) {
  if (!ctx.training || ctx.dropout <= 0.0) return x;
  return dropout(x, ctx.dropout, ctx.rng);
}

AttentionBlock AttentionBlock::create(ParamStore& store, const std::string& name, const AttentionConfig& config,
                                      bool pre_norm, Rng& rng) {
  AttentionBlock b;
  b.attention = MultiHeadAttention::create(store, name + ".attention", config, rng);
  b.attention_norm = LayerNorm::create(store, name + ".attention_norm", config.d_model);
  b.feed_forward = FeedForward::create(store, name + ".feed_forward", config.d_model, 4 * config.d_model, rng);
  b.feed_forward_norm = LayerNorm::create(store, name + ".feed_forward_norm", config.d_model);
  b.pre_norm = pre_norm;
  return b;
}

Var AttentionBlock::operator()(const Binder& bind, const Var& x, ForwardContext& ctx, ScoreBudget* budget) const {
  if (pre_norm) {
    Var normed = attention_norm(bind, x);
    Var h = add(x, maybe_dropout(attention(bind, normed, normed, ctx, budget), ctx));
    return add(h, maybe_dropout(feed_forward(bind, feed_forward_norm(bind, h)), ctx));
  }
  Var h = attention_norm(bind, add(x, maybe_dropout(attention(bind, x, x, ctx, budget), ctx)));
  return feed_forward_norm(bind, add(h, maybe_dropout(feed_forward(bind, h), ctx)));
}

std::size_t encoder_output_length(std::size_t length, std::size_t n_blocks) {
  if (n_blocks == 0) throw std::invalid_argument("encoder needs at least one block");
  for (std::size_t i = 1; i < n_blocks; ++i) {
    if (length < 2) throw std::invalid_argument("cannot distill length-1 sequence");
    length = (length + 1) / 2;
  }
  return length;
}

Encoder Encoder::create(ParamStore& store, const std::string& name, const EncoderConfig& config, Rng& rng) {
  if (config.n_blocks == 0) throw std::invalid_argument("encoder needs at least one block");
  Encoder e;
  e.config = config;
  for (std::size_t i = 0; i < config.n_blocks; ++i) {
    e.blocks.push_back(
        AttentionBlock::create(store, name + ".block" + std::to_string(i), config.attention, config.pre_norm, rng));
    if (i + 1 < config.n_blocks) {
      e.distills.push_back(DistillParams::create(store, name + ".distill" + std::to_string(i), config.attention.d_model, rng));
    }
  }
  return e;
}

Var Encoder::operator()(const Binder& bind, const Var& x_embed, ForwardContext& ctx, ScoreBudget* budget) const {
  Var x = x_embed;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    x = blocks[i](bind, x, ctx, budget);
    if (i < distills.size()) x = distill_step(bind, x, distills[i], config.distill);
  }
  return x;
}

}  // namespace higenet
