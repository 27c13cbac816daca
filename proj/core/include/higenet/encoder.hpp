#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "higenet/attention.hpp"
#include "higenet/layers.hpp"

namespace higenet {

enum class DistillKind {
  higenet,           // MP(F) + γ·AP(F) + DS(X)
  informer_maxpool,  // MP(F)
};

std::string_view distill_kind_name(DistillKind kind);

struct DistillParams {
  Conv1d conv;   // d_model → d_model, width 3, with bias
  ParamId gamma = 0;  // one scalar, initialised to 1

  static DistillParams create(ParamStore& store, const std::string& name, std::size_t d_model, Rng& rng);
};

// Max-pool, average-pool and residual down-sampling all use kernel 3,
// stride 2, padding 1 along time.
inline constexpr ops::PoolSpec kDistillMaxPool{ops::PoolKind::max, 3, 2, 1};
inline constexpr ops::PoolSpec kDistillAvgPool{ops::PoolKind::avg, 3, 2, 1};

// F = ELU(Conv1d(x)), length-preserving.
Var conv_elu_feature(const Binder& bind, const Var& x, const DistillParams& params);

// Halves the sequence: [L×d] → [⌈L/2⌉×d].
Var distill_step(const Binder& bind, const Var& x, const DistillParams& params,
                 DistillKind kind = DistillKind::higenet);

// Residual + layer norm + position-wise feed-forward around one attention call.
struct AttentionBlock {
  MultiHeadAttention attention;
  LayerNorm attention_norm;
  FeedForward feed_forward;
  LayerNorm feed_forward_norm;
  bool pre_norm = false;

  static AttentionBlock create(ParamStore& store, const std::string& name, const AttentionConfig& config,
                               bool pre_norm, Rng& rng);
  Var operator()(const Binder& bind, const Var& x, ForwardContext& ctx, ScoreBudget* budget = nullptr) const;
};

struct EncoderConfig {
  std::size_t n_blocks = 3;
  DistillKind distill = DistillKind::higenet;
  AttentionConfig attention;
  bool pre_norm = false;
};

// Output length after n_blocks − 1 halvings.
std::size_t encoder_output_length(std::size_t length, std::size_t n_blocks);

// AB₁ → distill → AB₂ → distill → … → AB_n.
struct Encoder {
  EncoderConfig config;
  std::vector<AttentionBlock> blocks;
  std::vector<DistillParams> distills;

  static Encoder create(ParamStore& store, const std::string& name, const EncoderConfig& config, Rng& rng);
  Var operator()(const Binder& bind, const Var& x_embed, ForwardContext& ctx, ScoreBudget* budget = nullptr) const;
};

// Inverted dropout gated on ctx.training.
Var maybe_dropout(const Var& x, ForwardContext& ctx);

}  // namespace higenet
