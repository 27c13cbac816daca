#pragma once

// Forward kernels (and their vector-Jacobian products) over plain tensors.
// The differentiable wrappers in autograd.hpp are built on these.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "higenet/tensor.hpp"

namespace higenet::ops {

Tensor matmul(const Tensor& a, const Tensor& b);     // [m×k]·[k×n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m×k]·[n×k]ᵀ
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // [k×m]ᵀ·[k×n]
Tensor transpose(const Tensor& a);

// Cross-correlation along the time axis. x: [L×C_in], kernel: [C_out×C_in×k],
// optional bias: [C_out]. Output: [L + 2·padding − k + 1 × C_out].
Tensor conv1d_time(const Tensor& x, const Tensor& kernel, std::size_t padding, const Tensor* bias = nullptr);

struct Conv1dGrads {
  Tensor x;
  Tensor kernel;
  Tensor bias;  // empty when the forward had no bias
};
Conv1dGrads conv1d_time_backward(const Tensor& x, const Tensor& kernel, std::size_t padding,
                                 const Tensor& grad_out, bool with_bias);

enum class PoolKind { max, avg };

struct PoolSpec {
  PoolKind kind = PoolKind::max;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t padding = 1;
};

std::size_t pooled_length(std::size_t length, const PoolSpec& spec);
// Per-channel pooling along time. Padded positions never win a max and are
// not counted in an average's divisor.
Tensor pool1d(const Tensor& x, const PoolSpec& spec);
Tensor pool1d_backward(const Tensor& x, const PoolSpec& spec, const Tensor& grad_out);

// Boolean mask over the rows × last-dimension of a score matrix; a set entry
// is forbidden.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols);

  // Lower-triangular: row i may see keys 0..i.
  static Mask causal(std::size_t length);
  // Row r corresponds to query position positions[r]; keys after it are forbidden.
  static Mask causal_for_positions(std::span<const std::size_t> positions, std::size_t keys);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool forbidden(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void forbid(std::size_t r, std::size_t c) { bits_[r * cols_ + c] = 1; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

Tensor softmax_lastdim(const Tensor& x, const Mask* mask = nullptr);
// Given y = softmax(x) and dL/dy, returns dL/dx.
Tensor softmax_backward(const Tensor& y, const Tensor& grad_y);

Tensor elu(const Tensor& x);
Tensor relu(const Tensor& x);

// Column means, [L×C] -> [1×C].
Tensor mean_rows(const Tensor& x);
// Inclusive prefix sums down the time axis.
Tensor cumsum_rows(const Tensor& x);

}  // namespace higenet::ops
