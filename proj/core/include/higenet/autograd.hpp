#pragma once

// Reverse-mode differentiation over a recorded operation tape.
//
// A Tape owns every intermediate value produced while it is alive. Parameters
// are bound by reference; after Tape::backward the gradient of the scalar
// loss with respect to each bound parameter is added into that parameter's
// grad buffer. A tape constructed with record=false evaluates values only.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "higenet/ops.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }

  Var constant(Tensor value);
  // Binds a parameter by reference. Repeated bindings of the same parameter
  // return the same node.
  Var parameter(ParamStore& store, ParamId id);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every bound parameter.
  void backward(const Var& loss);

  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  // Adds `grad` into the gradient slot of `target` when it participates.
  void accumulate(const Var& target, const Tensor& grad);
  const Tensor& value(std::size_t id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor* param = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> bound_params_;
};

// Elementwise, same shape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
// x scaled by a one-element variable.
Var scale_by(const Var& x, const Var& s);
// [L×C] + [C] (or [1×C]) broadcast over rows.
Var add_bias(const Var& x, const Var& bias);
// [L×C] ⊙ [L×1] broadcast over columns.
Var mul_col(const Var& x, const Var& column);

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);

Var conv1d_time(const Var& x, const Var& kernel, std::size_t padding, const std::optional<Var>& bias = std::nullopt);
Var pool1d(const Var& x, const ops::PoolSpec& spec);
Var softmax_lastdim(const Var& x, const ops::Mask* mask = nullptr);
Var elu(const Var& x);
Var relu(const Var& x);

// Row lookup into an embedding table [vocab×d].
Var embedding(const Var& table, std::span<const int> indices);

Var mean_rows(const Var& x);
// [1×C] repeated to [rows×C].
Var broadcast_rows(const Var& x, std::size_t rows);
Var cumsum_rows(const Var& x);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& x, std::size_t begin, std::size_t count);
Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var gather_rows(const Var& x, std::span<const std::size_t> rows);
// Copy of `base` whose rows listed in `rows` are replaced by the rows of `src`.
Var scatter_rows(const Var& base, const Var& src, std::span<const std::size_t> rows);

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
// Inverted dropout; identity when p == 0.
Var dropout(const Var& x, double p, Rng& rng);

Var sum_all(const Var& x);
// Mean squared error, a one-element result.
Var mse(const Var& pred, const Var& target);

}  // namespace higenet
