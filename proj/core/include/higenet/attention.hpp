#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "higenet/autograd.hpp"
#include "higenet/layers.hpp"
#include "higenet/ops.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

enum class AttentionKind { canonical, neural_sparse, masked_neural_sparse, prob_sparse, masked_prob_sparse };

std::string_view attention_kind_name(AttentionKind kind);
AttentionKind parse_attention_kind(std::string_view name);
bool is_masked(AttentionKind kind) noexcept;

// How lazy rows of a causal sparse kernel are filled.
enum class CausalFill {
  cumsum,        // Σ_{j≤i} v_j
  running_mean,  // (1/(i+1)) Σ_{j≤i} v_j
};

struct AttentionConfig {
  std::size_t n_heads = 8;
  std::size_t d_model = 512;
  double c = 5.0;
  AttentionKind kind = AttentionKind::neural_sparse;
  CausalFill causal_fill = CausalFill::cumsum;

  std::size_t d_head() const { return d_model / n_heads; }
  void validate() const;
};

// Instrumented count of materialized query–key dot products.
struct ScoreBudget {
  std::uint64_t dot_products = 0;
  std::uint64_t rows_selected = 0;

  ScoreBudget& operator+=(const ScoreBudget& other) noexcept {
    dot_products += other.dot_products;
    rows_selected += other.rows_selected;
    return *this;
  }
};

struct AttentionResult {
  Tensor output;
  ScoreBudget budget;
  std::vector<std::size_t> selected;  // ascending query indices that got full attention
};

// n = min(L, max(1, ceil(c·ln L))).
std::size_t top_n_count(std::size_t length, double c);

// Indices (ascending) of the n largest scores, ties broken toward the lower index.
std::vector<std::size_t> select_top_queries(std::span<const double> scores, double c);

// softmax(QKᵀ/√d, mask)·V.
Tensor canonical_attention(const Tensor& q, const Tensor& k, const Tensor& v, const ops::Mask* mask = nullptr,
                           ScoreBudget* budget = nullptr);

// I(Q) = Conv1d(Q + K), kernel [n_heads × d_model × 3], padding 1 → [L × n_heads].
Tensor importance_scores(const Tensor& q, const Tensor& k, const Tensor& kernel, const Tensor* bias = nullptr);

// Dense attention for the top-n queries by `importance`; lazy rows get mean(V).
AttentionResult neural_sparse_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                        std::span<const double> importance, double c);

// Causal variant: selected rows see keys j ≤ i; lazy rows get the causal fill.
AttentionResult masked_neural_sparse_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                               std::span<const double> importance, double c,
                                               CausalFill fill = CausalFill::cumsum);

// Query sparsity M(q) = max_j s_j − mean_j s_j over a sampled key subset.
Tensor sparsity_measure(const Tensor& q, const Tensor& k, std::span<const std::size_t> sampled_keys);

// Baseline that ranks queries by the sampled sparsity measure.
AttentionResult prob_sparse_attention(const Tensor& q, const Tensor& k, const Tensor& v, double c, bool masked,
                                      Rng& rng, CausalFill fill = CausalFill::cumsum);

// u = min(L_K, max(1, ceil(c·ln L_K))) key indices without replacement, ascending.
std::vector<std::size_t> sample_keys(std::size_t keys, double c, Rng& rng);

// Multi-head attention with learned projections W_Q, W_K, W_V, W_O (no
// biases). Sparse kinds select queries per head from the importance column
// of that head (neural) or from the sampled sparsity measure (prob).
struct MultiHeadAttention {
  AttentionConfig config;
  ParamId w_q = 0;
  ParamId w_k = 0;
  ParamId w_v = 0;
  ParamId w_o = 0;
  std::optional<Conv1d> importance;

  static MultiHeadAttention create(ParamStore& store, const std::string& name, const AttentionConfig& config,
                                   Rng& rng);

  Var operator()(const Binder& bind, const Var& x_q, const Var& x_kv, ForwardContext& ctx,
                 ScoreBudget* budget = nullptr) const;
};

}  // namespace higenet
