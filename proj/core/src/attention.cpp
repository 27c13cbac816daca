#include "higenet/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

namespace higenet {

std::string_view attention_kind_name(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::canonical: return "canonical";
    case AttentionKind::neural_sparse: return "neural_sparse";
    case AttentionKind::masked_neural_sparse: return "masked_neural_sparse";
    case AttentionKind::prob_sparse: return "prob_sparse";
    case AttentionKind::masked_prob_sparse: return "masked_prob_sparse";
  }
  return "unknown";
}

AttentionKind parse_attention_kind(std::string_view name) {
  for (auto k : {AttentionKind::canonical, AttentionKind::neural_sparse, AttentionKind::masked_neural_sparse,
                 AttentionKind::prob_sparse, AttentionKind::masked_prob_sparse}) {
    if (attention_kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown attention kind '" + std::string(name) + "'");
}

bool is_masked(AttentionKind kind) noexcept {
  return kind == AttentionKind::masked_neural_sparse || kind == AttentionKind::masked_prob_sparse;
}

void AttentionConfig::validate() const {
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw std::invalid_argument("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                                std::to_string(n_heads));
  }
  if (!(c >= 1.0)) throw std::invalid_argument("sparsity factor c must be >= 1");
}

std::size_t top_n_count(std::size_t length, double c) {
  if (length == 0) throw std::invalid_argument("top_n_count: empty sequence");
  const double raw = std::ceil(c * std::log(static_cast<double>(length)));
  const double clamped = std::max(1.0, raw);
  return clamped >= static_cast<double>(length) ? length : static_cast<std::size_t>(clamped);
}

std::vector<std::size_t> select_top_queries(std::span<const double> scores, double c) {
  const std::size_t n = top_n_count(scores.size(), c);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

void check_qkv(const Tensor& q, const Tensor& k, const Tensor& v) {
  require_matrix(q, "Q");
  require_matrix(k, "K");
  require_matrix(v, "V");
  if (q.cols() != k.cols()) {
    throw std::invalid_argument("attention: query width " + std::to_string(q.cols()) + " vs key width " +
                                std::to_string(k.cols()));
  }
  if (k.rows() != v.rows()) {
    throw std::invalid_argument("attention: " + std::to_string(k.rows()) + " keys but " + std::to_string(v.rows()) +
                                " values");
  }
}

void check_self(const Tensor& q, const Tensor& k) {
  if (q.rows() != k.rows()) {
    throw std::invalid_argument("self-attention requires L_Q == L_K, got " + std::to_string(q.rows()) + " and " +
                                std::to_string(k.rows()));
  }
}

Tensor gather(const Tensor& x, std::span<const std::size_t> rows) {
  Tensor out = Tensor::matrix(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.data() + rows[i] * x.cols(), x.cols(), out.data() + i * x.cols());
  return out;
}

Tensor causal_fill_rows(const Tensor& v, CausalFill fill) {
  Tensor out = ops::cumsum_rows(v);
  if (fill == CausalFill::running_mean) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= static_cast<double>(r + 1);
    }
  }
  return out;
}

// Full attention for the selected query rows written over `base`.
void attend_selected(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::size_t> selected,
                     bool masked, Tensor& base, ScoreBudget& budget) {
  const Tensor q_sel = gather(q, selected);
  Tensor scores = ops::matmul_nt(q_sel, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (double& s : scores.values()) s *= scale;
  std::optional<ops::Mask> mask;
  if (masked) mask = ops::Mask::causal_for_positions(selected, k.rows());
  const Tensor probs = ops::softmax_lastdim(scores, mask ? &*mask : nullptr);
  const Tensor rows = ops::matmul(probs, v);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    std::copy_n(rows.data() + i * v.cols(), v.cols(), base.data() + selected[i] * v.cols());
  }
  budget.dot_products += static_cast<std::uint64_t>(selected.size()) * k.rows();
  budget.rows_selected += selected.size();
}

}  // namespace

Tensor canonical_attention(const Tensor& q, const Tensor& k, const Tensor& v, const ops::Mask* mask,
                           ScoreBudget* budget) {
  check_qkv(q, k, v);
  if (mask && q.rows() != k.rows()) throw std::invalid_argument("canonical_attention: causal mask needs L_Q == L_K");
  Tensor scores = ops::matmul_nt(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (double& s : scores.values()) s *= scale;
  if (budget) {
    budget->dot_products += static_cast<std::uint64_t>(q.rows()) * k.rows();
    budget->rows_selected += q.rows();
  }
  return ops::matmul(ops::softmax_lastdim(scores, mask), v);
}

Tensor importance_scores(const Tensor& q, const Tensor& k, const Tensor& kernel, const Tensor* bias) {
  require_matrix(q, "Q");
  require_matrix(k, "K");
  if (q.rows() != k.rows()) {
    throw std::invalid_argument("importance_scores: L_Q " + std::to_string(q.rows()) + " != L_K " +
                                std::to_string(k.rows()) + " (cross-attention must use canonical)");
  }
  if (q.cols() != k.cols()) throw std::invalid_argument("importance_scores: Q and K widths differ");
  Tensor sum = q;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += k[i];
  return ops::conv1d_time(sum, kernel, 1, bias);
}

AttentionResult neural_sparse_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                        std::span<const double> importance, double c) {
  check_qkv(q, k, v);
  check_self(q, k);
  if (importance.size() != q.rows()) throw std::invalid_argument("neural_sparse_attention: one score per query required");
  AttentionResult r;
  r.selected = select_top_queries(importance, c);
  const Tensor mean = ops::mean_rows(v);
  r.output = Tensor::matrix(q.rows(), v.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) std::copy_n(mean.data(), v.cols(), r.output.data() + i * v.cols());
  attend_selected(q, k, v, r.selected, false, r.output, r.budget);
  return r;
}

AttentionResult masked_neural_sparse_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                               std::span<const double> importance, double c, CausalFill fill) {
  check_qkv(q, k, v);
  check_self(q, k);
  if (importance.size() != q.rows()) {
    throw std::invalid_argument("masked_neural_sparse_attention: one score per query required");
  }
  AttentionResult r;
  r.selected = select_top_queries(importance, c);
  r.output = causal_fill_rows(v, fill);
  attend_selected(q, k, v, r.selected, true, r.output, r.budget);
  return r;
}

std::vector<std::size_t> sample_keys(std::size_t keys, double c, Rng& rng) {
  const std::size_t u = top_n_count(keys, c);
  std::vector<std::size_t> pool(keys);
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher–Yates.
  for (std::size_t i = 0; i < u; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, keys - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(u);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Tensor sparsity_measure(const Tensor& q, const Tensor& k, std::span<const std::size_t> sampled_keys) {
  if (sampled_keys.empty()) throw std::invalid_argument("sparsity_measure: no sampled keys");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor m = Tensor::matrix(q.rows(), 1);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t j : sampled_keys) {
      double dot = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
      dot *= scale;
      best = std::max(best, dot);
      total += dot;
    }
    m[i] = best - total / static_cast<double>(sampled_keys.size());
  }
  return m;
}

AttentionResult prob_sparse_attention(const Tensor& q, const Tensor& k, const Tensor& v, double c, bool masked,
                                      Rng& rng, CausalFill fill) {
  check_qkv(q, k, v);
  check_self(q, k);
  AttentionResult r;
  const auto sampled = sample_keys(k.rows(), c, rng);
  const Tensor m = sparsity_measure(q, k, sampled);
  r.budget.dot_products += static_cast<std::uint64_t>(q.rows()) * sampled.size();
  r.selected = select_top_queries(m.values(), c);
  if (masked) {
    r.output = causal_fill_rows(v, fill);
  } else {
    const Tensor mean = ops::mean_rows(v);
    r.output = Tensor::matrix(q.rows(), v.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) std::copy_n(mean.data(), v.cols(), r.output.data() + i * v.cols());
  }
  attend_selected(q, k, v, r.selected, masked, r.output, r.budget);
  return r;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& name,
                                              const AttentionConfig& config, Rng& rng) {
  config.validate();
  MultiHeadAttention mha;
  mha.config = config;
  const std::size_t d = config.d_model;
  const double bound = std::sqrt(1.0 / static_cast<double>(d));
  mha.w_q = store.add(name + ".w_q", Tensor::uniform({d, d}, bound, rng));
  mha.w_k = store.add(name + ".w_k", Tensor::uniform({d, d}, bound, rng));
  mha.w_v = store.add(name + ".w_v", Tensor::uniform({d, d}, bound, rng));
  mha.w_o = store.add(name + ".w_o", Tensor::uniform({d, d}, bound, rng));
  if (config.kind == AttentionKind::neural_sparse || config.kind == AttentionKind::masked_neural_sparse) {
    mha.importance = Conv1d::create(store, name + ".importance", d, config.n_heads, 3, true, rng);
  }
  return mha;
}

namespace {

Var head_dense(const Var& q, const Var& k, const Var& v, double scale_factor) {
  return matmul(softmax_lastdim(scale(matmul_nt(q, k), scale_factor)), v);
}

Var head_sparse(const Var& q, const Var& k, const Var& v, std::span<const std::size_t> selected, bool masked,
                CausalFill fill, double scale_factor) {
  const std::size_t length = q.rows();
  Var q_sel = gather_rows(q, selected);
  Var scores = scale(matmul_nt(q_sel, k), scale_factor);
  std::optional<ops::Mask> mask;
  if (masked) mask = ops::Mask::causal_for_positions(selected, k.rows());
  Var rows = matmul(softmax_lastdim(scores, mask ? &*mask : nullptr), v);
  Var base;
  if (masked) {
    base = cumsum_rows(v);
    if (fill == CausalFill::running_mean) {
      Tensor inv = Tensor::matrix(length, 1);
      for (std::size_t i = 0; i < length; ++i) inv[i] = 1.0 / static_cast<double>(i + 1);
      base = mul_col(base, v.tape().constant(std::move(inv)));
    }
  } else {
    base = broadcast_rows(mean_rows(v), length);
  }
  return scatter_rows(base, rows, selected);
}

}  // namespace

Var MultiHeadAttention::operator()(const Binder& bind, const Var& x_q, const Var& x_kv, ForwardContext& ctx,
                                   ScoreBudget* budget) const {
  const std::size_t heads = config.n_heads;
  const std::size_t dh = config.d_head();
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool sparse = config.kind != AttentionKind::canonical;
  if (sparse && x_q.id() != x_kv.id() && x_q.rows() != x_kv.rows()) {
    throw std::invalid_argument(std::string(attention_kind_name(config.kind)) +
                                " attention requires self-attention shapes; use canonical for cross-attention");
  }

  Var q = matmul(x_q, bind(w_q));
  Var k = matmul(x_kv, bind(w_k));
  Var v = matmul(x_kv, bind(w_v));

  Tensor scores;
  if (importance) {
    const Tensor& kernel = bind.params[importance->kernel];
    const Tensor* bias = importance->bias ? &bind.params[*importance->bias] : nullptr;
    scores = importance_scores(q.value(), k.value(), kernel, bias);
  }
  std::vector<std::size_t> sampled;
  const bool prob = config.kind == AttentionKind::prob_sparse || config.kind == AttentionKind::masked_prob_sparse;

  std::vector<Var> outputs;
  outputs.reserve(heads);
  ScoreBudget local;
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice_cols(q, h * dh, dh);
    Var kh = heads == 1 ? k : slice_cols(k, h * dh, dh);
    Var vh = heads == 1 ? v : slice_cols(v, h * dh, dh);
    if (!sparse) {
      outputs.push_back(head_dense(qh, kh, vh, scale_factor));
      local.dot_products += static_cast<std::uint64_t>(qh.rows()) * kh.rows();
      local.rows_selected += qh.rows();
      continue;
    }
    std::vector<std::size_t> selected;
    if (prob) {
      sampled = sample_keys(kh.rows(), config.c, ctx.rng);
      const Tensor m = sparsity_measure(qh.value(), kh.value(), sampled);
      local.dot_products += static_cast<std::uint64_t>(qh.rows()) * sampled.size();
      selected = select_top_queries(m.values(), config.c);
    } else {
      std::vector<double> column(scores.rows());
      for (std::size_t i = 0; i < scores.rows(); ++i) column[i] = scores(i, h);
      selected = select_top_queries(column, config.c);
    }
    local.dot_products += static_cast<std::uint64_t>(selected.size()) * kh.rows();
    local.rows_selected += selected.size();
    outputs.push_back(head_sparse(qh, kh, vh, selected, is_masked(config.kind), config.causal_fill, scale_factor));
  }
  if (budget) *budget += local;
  Var merged = heads == 1 ? outputs.front() : concat_cols(outputs);
  return matmul(merged, bind(w_o));
}

}  // namespace higenet
