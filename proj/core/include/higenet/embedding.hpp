#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "higenet/autograd.hpp"
#include "higenet/layers.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

enum class StampCategory : std::size_t { month = 0, day, weekday, hour, minute_bucket };

inline constexpr std::size_t kStampCategories = 5;
// Vocabulary per category: month 0..12, day 0..31, weekday 0..6, hour 0..23,
// minute/15 in 0..3.
inline constexpr std::array<std::size_t, kStampCategories> kStampVocab{13, 32, 7, 24, 4};

std::string_view stamp_category_name(StampCategory category);

// Calendar stamp indices per position, one column per category.
class TimeFeatures {
 public:
  TimeFeatures() = default;
  explicit TimeFeatures(std::size_t length);

  std::size_t size() const noexcept { return columns_[0].size(); }
  void set(std::size_t pos, StampCategory category, int value);
  int get(std::size_t pos, StampCategory category) const;
  std::span<const int> column(StampCategory category) const;
  // Throws std::out_of_range naming the category and value of the first bad index.
  void validate() const;
  // Rows [begin, begin+count).
  TimeFeatures slice(std::size_t begin, std::size_t count) const;
  static TimeFeatures concat(const TimeFeatures& head, const TimeFeatures& tail);

 private:
  std::array<std::vector<int>, kStampCategories> columns_;
};

enum class EmbeddingStyle {
  higenet,   // X = u + PE + β ⊙ ΣSE
  informer,  // X = u + PE + ΣSE (gate bypassed, β ≡ 1)
};

struct EmbeddingParams {
  ParamId token_kernel = 0;  // [d_model × d_in × 3], no bias
  std::array<ParamId, kStampCategories> stamp_tables{};
  Linear gate;  // d_model → 1
  std::size_t d_in = 0;
  std::size_t d_model = 0;

  static EmbeddingParams create(ParamStore& store, const std::string& name, std::size_t d_in, std::size_t d_model,
                                Rng& rng);
};

// Fixed sinusoidal table: PE[pos,2j] = sin(pos / (2·base_len)^(2j/d_model)),
// PE[pos,2j+1] = cos(...), pos = 0..rows−1. base_len defaults to rows.
Tensor positional_encoding(std::size_t rows, std::size_t d_model, std::size_t base_len = 0);

// Σ_p SE_p[index_p(pos)] per position → [L × d_model].
Var stamp_embedding_sum(const Binder& bind, const TimeFeatures& features, const EmbeddingParams& params);

// β = ReLU(FC(PE + ΣSE)), one non-negative scalar per position → [L × 1].
Var beta_gate(const Binder& bind, const Var& pe_plus_se, const EmbeddingParams& params);

// X_feed = conv(values) + PE + β ⊙ ΣSE. `values` is [L × d_in]; PE uses
// window-relative positions with base length `pe_base_len` (0 = L).
Var embed_window(const Binder& bind, const Var& values, const TimeFeatures& features, const EmbeddingParams& params,
                 EmbeddingStyle style = EmbeddingStyle::higenet, std::size_t pe_base_len = 0);

}  // namespace higenet
