#include "higenet/model.hpp"

#include <stdexcept>

namespace higenet {

void ModelConfig::validate() const {
  if (seq_len == 0) throw std::invalid_argument("seq_len must be positive");
  if (pred_len == 0) throw std::invalid_argument("pred_len must be positive");
  if (label_len > seq_len) {
    throw std::invalid_argument("label_len " + std::to_string(label_len) + " exceeds seq_len " +
                                std::to_string(seq_len));
  }
  if (d_x == 0 || d_y == 0) throw std::invalid_argument("d_x and d_y must be positive");
  if (decoder_layers == 0) throw std::invalid_argument("decoder needs at least one layer");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");
  attention_config(AttentionKind::canonical).validate();
  encoder_output_length(seq_len, encoder_blocks);
}

EmbeddingStyle ModelConfig::embedding_style() const noexcept {
  return variant.embedding ? EmbeddingStyle::higenet : EmbeddingStyle::informer;
}

DistillKind ModelConfig::distill_kind() const noexcept {
  return variant.distill ? DistillKind::higenet : DistillKind::informer_maxpool;
}

AttentionKind ModelConfig::encoder_attention() const noexcept {
  return variant.neural_sparse ? AttentionKind::neural_sparse : AttentionKind::prob_sparse;
}

AttentionKind ModelConfig::decoder_self_attention() const noexcept {
  return variant.neural_sparse ? AttentionKind::masked_neural_sparse : AttentionKind::masked_prob_sparse;
}

AttentionConfig ModelConfig::attention_config(AttentionKind kind) const {
  AttentionConfig a;
  a.n_heads = n_heads;
  a.d_model = d_model;
  a.c = c;
  a.kind = kind;
  a.causal_fill = causal_fill;
  return a;
}

WindowSpec ModelConfig::window_spec(FeatureMode mode) const {
  return WindowSpec{seq_len, label_len, pred_len, gap, mode};
}

Tensor build_decoder_input(const Tensor& encoder_values, std::size_t label_len, std::size_t pred_len) {
  require_matrix(encoder_values, "decoder known values");
  if (label_len > encoder_values.rows()) {
    throw std::invalid_argument("label_len " + std::to_string(label_len) + " exceeds the " +
                                std::to_string(encoder_values.rows()) + " known rows");
  }
  if (pred_len == 0) throw std::invalid_argument("pred_len must be positive");
  const std::size_t d = encoder_values.cols();
  const std::size_t offset = encoder_values.rows() - label_len;
  Tensor out = Tensor::matrix(label_len + pred_len, d);
  for (std::size_t r = 0; r < label_len; ++r) {
    for (std::size_t c = 0; c < d; ++c) out(r, c) = encoder_values(offset + r, c);
  }
  return out;
}

DecoderLayer DecoderLayer::create(ParamStore& store, const std::string& name, const ModelConfig& config, Rng& rng) {
  DecoderLayer l;
  l.self_attention =
      MultiHeadAttention::create(store, name + ".self_attention", config.attention_config(config.decoder_self_attention()), rng);
  l.self_norm = LayerNorm::create(store, name + ".self_norm", config.d_model);
  l.cross_attention =
      MultiHeadAttention::create(store, name + ".cross_attention", config.attention_config(AttentionKind::canonical), rng);
  l.cross_norm = LayerNorm::create(store, name + ".cross_norm", config.d_model);
  l.feed_forward = FeedForward::create(store, name + ".feed_forward", config.d_model, 4 * config.d_model, rng);
  l.feed_forward_norm = LayerNorm::create(store, name + ".feed_forward_norm", config.d_model);
  l.pre_norm = config.pre_norm;
  return l;
}

Var DecoderLayer::operator()(const Binder& bind, const Var& x, const Var& memory, ForwardContext& ctx,
                             ScoreBudget* budget) const {
  if (pre_norm) {
    Var n1 = self_norm(bind, x);
    Var h = add(x, maybe_dropout(self_attention(bind, n1, n1, ctx, budget), ctx));
    h = add(h, maybe_dropout(cross_attention(bind, cross_norm(bind, h), memory, ctx, budget), ctx));
    return add(h, maybe_dropout(feed_forward(bind, feed_forward_norm(bind, h)), ctx));
  }
  Var h = self_norm(bind, add(x, maybe_dropout(self_attention(bind, x, x, ctx, budget), ctx)));
  h = cross_norm(bind, add(h, maybe_dropout(cross_attention(bind, h, memory, ctx, budget), ctx)));
  return feed_forward_norm(bind, add(h, maybe_dropout(feed_forward(bind, h), ctx)));
}

Var decoder_forward(const Binder& bind, const Var& dec_embed, const Var& enc_out,
                    const std::vector<DecoderLayer>& layers, ForwardContext& ctx, ScoreBudget* budget) {
  Var x = dec_embed;
  for (const auto& layer : layers) x = layer(bind, x, enc_out, ctx, budget);
  return x;
}

HigeNet HigeNet::create(ParamStore& store, const ModelConfig& config, Rng& rng) {
  config.validate();
  HigeNet m;
  m.config = config;
  m.encoder_embedding = EmbeddingParams::create(store, "encoder.embedding", config.d_x, config.d_model, rng);
  m.decoder_embedding = EmbeddingParams::create(store, "decoder.embedding", config.d_y, config.d_model, rng);
  EncoderConfig ec;
  ec.n_blocks = config.encoder_blocks;
  ec.distill = config.distill_kind();
  ec.attention = config.attention_config(config.encoder_attention());
  ec.pre_norm = config.pre_norm;
  m.encoder = Encoder::create(store, "encoder", ec, rng);
  for (std::size_t i = 0; i < config.decoder_layers; ++i) {
    m.decoder.push_back(DecoderLayer::create(store, "decoder.layer" + std::to_string(i), config, rng));
  }
  m.projection = Linear::create(store, "projection", config.d_model, config.d_y, true, rng);
  return m;
}

Var HigeNet::forward(const Binder& bind, const WindowSample& sample, ForwardContext& ctx, ForwardStats* stats) const {
  const ModelConfig& cfg = config;
  if (sample.enc_values.rows() != cfg.seq_len || sample.enc_values.cols() != cfg.d_x) {
    throw std::invalid_argument("encoder window " + shape_to_string(sample.enc_values.shape()) + " does not match [" +
                                std::to_string(cfg.seq_len) + ", " + std::to_string(cfg.d_x) + "]");
  }
  if (sample.enc_targets.cols() != cfg.d_y) {
    throw std::invalid_argument("known target columns " + std::to_string(sample.enc_targets.cols()) +
                                " do not match d_y " + std::to_string(cfg.d_y));
  }
  if (sample.dec_stamps.size() != cfg.decoder_length()) {
    throw std::invalid_argument("decoder stamps have " + std::to_string(sample.dec_stamps.size()) + " rows, expected " +
                                std::to_string(cfg.decoder_length()));
  }
  Tape& tape = bind.tape;
  ScoreBudget* enc_budget = stats ? &stats->encoder : nullptr;
  ScoreBudget* dec_budget = stats ? &stats->decoder : nullptr;

  Var enc_in = tape.constant(sample.enc_values);
  Var enc_embed = embed_window(bind, enc_in, sample.enc_stamps, encoder_embedding, cfg.embedding_style());
  Var enc_out = encoder(bind, maybe_dropout(enc_embed, ctx), ctx, enc_budget);

  // Decoder positions share the encoder's PE base so both tables agree on scale.
  Var dec_in = tape.constant(build_decoder_input(sample.enc_targets, cfg.label_len, cfg.pred_len));
  Var dec_embed =
      embed_window(bind, dec_in, sample.dec_stamps, decoder_embedding, cfg.embedding_style(), cfg.seq_len);
  Var dec_out = decoder_forward(bind, maybe_dropout(dec_embed, ctx), enc_out, decoder, ctx, dec_budget);
  if (stats) ++stats->decoder_passes;

  Var projected = projection(bind, dec_out);
  return slice_rows(projected, cfg.label_len, cfg.pred_len);
}

Tensor HigeNet::predict(ParamStore& store, const WindowSample& sample, ForwardStats* stats) const {
  Tape tape(false);
  Binder bind{tape, store};
  ForwardContext ctx;
  return forward(bind, sample, ctx, stats).value();
}

Var mse_loss(const Var& prediction, const Var& target) {
  if (prediction.shape() != target.shape()) {
    throw std::invalid_argument("mse_loss: shape mismatch " + shape_to_string(prediction.shape()) + " vs " +
                                shape_to_string(target.shape()));
  }
  return mse(prediction, target);
}

double mse_loss(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw std::invalid_argument("mse_loss: shape mismatch " + shape_to_string(prediction.shape()) + " vs " +
                                shape_to_string(target.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    total += d * d;
  }
  return total / static_cast<double>(prediction.size());
}

}  // namespace higenet
