#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "higenet/attention.hpp"
#include "higenet/data.hpp"
#include "higenet/embedding.hpp"
#include "higenet/encoder.hpp"
#include "higenet/layers.hpp"

namespace higenet {

// Architectural toggles for the ablation matrix. All on = full model; all off
// = Informer-style embedding, max-pool distilling and ProbSparse attention.
struct VariantToggles {
  bool embedding = true;
  bool distill = true;
  bool neural_sparse = true;

  bool operator==(const VariantToggles&) const = default;
};

struct ModelConfig {
  std::size_t seq_len = 96;   // L_x
  std::size_t label_len = 48;
  std::size_t pred_len = 24;  // L_y
  std::size_t gap = 0;        // h
  std::size_t d_x = 7;
  std::size_t d_y = 7;
  std::size_t d_model = 512;
  std::size_t n_heads = 8;
  double c = 5.0;
  std::size_t encoder_blocks = 3;
  std::size_t decoder_layers = 1;
  double dropout = 0.05;
  bool pre_norm = false;
  CausalFill causal_fill = CausalFill::cumsum;
  VariantToggles variant;

  void validate() const;
  std::size_t decoder_length() const noexcept { return label_len + pred_len; }
  EmbeddingStyle embedding_style() const noexcept;
  DistillKind distill_kind() const noexcept;
  AttentionKind encoder_attention() const noexcept;
  AttentionKind decoder_self_attention() const noexcept;
  AttentionConfig attention_config(AttentionKind kind) const;
  WindowSpec window_spec(FeatureMode mode) const;
};

// Last label_len rows of the known target series followed by L_y zero rows.
Tensor build_decoder_input(const Tensor& encoder_values, std::size_t label_len, std::size_t pred_len);

// Masked self-attention → canonical cross-attention → feed-forward, each with
// residual and layer norm.
struct DecoderLayer {
  MultiHeadAttention self_attention;
  LayerNorm self_norm;
  MultiHeadAttention cross_attention;
  LayerNorm cross_norm;
  FeedForward feed_forward;
  LayerNorm feed_forward_norm;
  bool pre_norm = false;

  static DecoderLayer create(ParamStore& store, const std::string& name, const ModelConfig& config, Rng& rng);
  Var operator()(const Binder& bind, const Var& x, const Var& memory, ForwardContext& ctx,
                 ScoreBudget* budget = nullptr) const;
};

Var decoder_forward(const Binder& bind, const Var& dec_embed, const Var& enc_out,
                    const std::vector<DecoderLayer>& layers, ForwardContext& ctx, ScoreBudget* budget = nullptr);

struct ForwardStats {
  ScoreBudget encoder;
  ScoreBudget decoder;
  std::uint64_t decoder_passes = 0;
};

struct HigeNet {
  ModelConfig config;
  EmbeddingParams encoder_embedding;
  EmbeddingParams decoder_embedding;
  Encoder encoder;
  std::vector<DecoderLayer> decoder;
  Linear projection;  // d_model → d_y, with bias

  static HigeNet create(ParamStore& store, const ModelConfig& config, Rng& rng);

  // One-shot forecast [L_y × d_y] for one window.
  Var forward(const Binder& bind, const WindowSample& sample, ForwardContext& ctx,
              ForwardStats* stats = nullptr) const;
  // Evaluation-mode forward on a value-only tape.
  Tensor predict(ParamStore& store, const WindowSample& sample, ForwardStats* stats = nullptr) const;
};

// Mean squared error over all entries.
Var mse_loss(const Var& prediction, const Var& target);
double mse_loss(const Tensor& prediction, const Tensor& target);

}  // namespace higenet
