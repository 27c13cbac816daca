#include "higenet/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace higenet {

std::string_view stamp_category_name(StampCategory category) {
  switch (category) {
    case StampCategory::month: return "month";
    case StampCategory::day: return "day";
    case StampCategory::weekday: return "weekday";
    case StampCategory::hour: return "hour";
    case StampCategory::minute_bucket: return "minute_bucket";
  }
  return "unknown";
}

TimeFeatures::TimeFeatures(std::size_t length) {
  for (auto& c : columns_) c.assign(length, 0);
}

void TimeFeatures::set(std::size_t pos, StampCategory category, int value) {
  columns_[static_cast<std::size_t>(category)].at(pos) = value;
}

int TimeFeatures::get(std::size_t pos, StampCategory category) const {
  return columns_[static_cast<std::size_t>(category)].at(pos);
}

std::span<const int> TimeFeatures::column(StampCategory category) const {
  return columns_[static_cast<std::size_t>(category)];
}

void TimeFeatures::validate() const {
  for (std::size_t c = 0; c < kStampCategories; ++c) {
    for (int v : columns_[c]) {
      if (v < 0 || static_cast<std::size_t>(v) >= kStampVocab[c]) {
        throw std::out_of_range("stamp index out of range: category " +
                                std::string(stamp_category_name(static_cast<StampCategory>(c))) + " value " +
                                std::to_string(v) + " (vocabulary " + std::to_string(kStampVocab[c]) + ")");
      }
    }
  }
}

TimeFeatures TimeFeatures::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw std::out_of_range("TimeFeatures::slice past end");
  TimeFeatures out;
  for (std::size_t c = 0; c < kStampCategories; ++c) {
    out.columns_[c].assign(columns_[c].begin() + static_cast<std::ptrdiff_t>(begin),
                           columns_[c].begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return out;
}

TimeFeatures TimeFeatures::concat(const TimeFeatures& head, const TimeFeatures& tail) {
  TimeFeatures out = head;
  for (std::size_t c = 0; c < kStampCategories; ++c) {
    out.columns_[c].insert(out.columns_[c].end(), tail.columns_[c].begin(), tail.columns_[c].end());
  }
  return out;
}

EmbeddingParams EmbeddingParams::create(ParamStore& store, const std::string& name, std::size_t d_in,
                                        std::size_t d_model, Rng& rng) {
  EmbeddingParams p;
  p.d_in = d_in;
  p.d_model = d_model;
  const double bound = std::sqrt(1.0 / static_cast<double>(d_in * 3));
  p.token_kernel = store.add(name + ".token.kernel", Tensor::uniform({d_model, d_in, 3}, bound, rng));
  for (std::size_t c = 0; c < kStampCategories; ++c) {
    p.stamp_tables[c] = store.add(name + ".stamp." + std::string(stamp_category_name(static_cast<StampCategory>(c))),
                                  Tensor::normal({kStampVocab[c], d_model}, 0.02, rng));
  }
  p.gate.weight = store.add(name + ".gate.weight", Tensor::uniform({d_model, 1}, std::sqrt(1.0 / d_model), rng));
  p.gate.bias = store.add(name + ".gate.bias", Tensor({1}, 0.0));
  return p;
}

Tensor positional_encoding(std::size_t rows, std::size_t d_model, std::size_t base_len) {
  if (d_model == 0 || d_model % 2 != 0) {
    throw std::invalid_argument("positional_encoding: d_model must be even, got " + std::to_string(d_model));
  }
  if (rows == 0) throw std::invalid_argument("positional_encoding: length must be >= 1");
  if (base_len == 0) base_len = rows;
  const double base = 2.0 * static_cast<double>(base_len);
  Tensor pe = Tensor::matrix(rows, d_model);
  for (std::size_t j = 0; j < d_model / 2; ++j) {
    const double denom = std::pow(base, 2.0 * static_cast<double>(j) / static_cast<double>(d_model));
    for (std::size_t pos = 0; pos < rows; ++pos) {
      const double angle = static_cast<double>(pos) / denom;
      pe(pos, 2 * j) = std::sin(angle);
      pe(pos, 2 * j + 1) = std::cos(angle);
    }
  }
  return pe;
}

Var stamp_embedding_sum(const Binder& bind, const TimeFeatures& features, const EmbeddingParams& params) {
  features.validate();
  Var total;
  for (std::size_t c = 0; c < kStampCategories; ++c) {
    Var rows = embedding(bind(params.stamp_tables[c]), features.column(static_cast<StampCategory>(c)));
    total = total.valid() ? add(total, rows) : rows;
  }
  return total;
}

Var beta_gate(const Binder& bind, const Var& pe_plus_se, const EmbeddingParams& params) {
  if (pe_plus_se.cols() != params.d_model) {
    throw std::invalid_argument("beta_gate: input width " + std::to_string(pe_plus_se.cols()) + " vs d_model " +
                                std::to_string(params.d_model));
  }
  return relu(params.gate(bind, pe_plus_se));
}

Var embed_window(const Binder& bind, const Var& values, const TimeFeatures& features, const EmbeddingParams& params,
                 EmbeddingStyle style, std::size_t pe_base_len) {
  const std::size_t length = values.rows();
  if (features.size() != length) {
    throw std::invalid_argument("embed_window: " + std::to_string(length) + " value rows but " +
                                std::to_string(features.size()) + " stamp rows");
  }
  Var token = conv1d_time(values, bind(params.token_kernel), 1);
  Var pe = bind.tape.constant(positional_encoding(length, params.d_model, pe_base_len));
  Var se = stamp_embedding_sum(bind, features, params);
  Var gated_se = se;
  if (style == EmbeddingStyle::higenet) gated_se = mul_col(se, beta_gate(bind, add(pe, se), params));
  return add(add(token, pe), gated_se);
}

}  // namespace higenet
