#include "higenet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace higenet::ops {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())}; }
MutMap view(Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())}; }

void require_inner(std::size_t a, std::size_t b, const Tensor& x, const Tensor& y, const char* op) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_to_string(x.shape()) + " and " +
                                shape_to_string(y.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  require_inner(a.cols(), b.rows(), a, b, "matmul");
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt lhs");
  require_matrix(b, "matmul_nt rhs");
  require_inner(a.cols(), b.cols(), a, b, "matmul_nt");
  Tensor out = Tensor::matrix(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn lhs");
  require_matrix(b, "matmul_tn rhs");
  require_inner(a.rows(), b.rows(), a, b, "matmul_tn");
  Tensor out = Tensor::matrix(a.cols(), b.cols());
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  view(out) = view(a).transpose();
  return out;
}

namespace {

struct ConvDims {
  std::size_t length, c_in, c_out, k, out_length;
};

ConvDims conv_dims(const Tensor& x, const Tensor& kernel, std::size_t padding) {
  require_matrix(x, "conv1d_time input");
  if (kernel.rank() != 3) {
    throw std::invalid_argument("conv1d_time kernel must be [C_out x C_in x k], got " + shape_to_string(kernel.shape()));
  }
  ConvDims d{x.rows(), x.cols(), kernel.extent(0), kernel.extent(2), 0};
  if (kernel.extent(1) != d.c_in) {
    throw std::invalid_argument("conv1d_time channel mismatch: input " + shape_to_string(x.shape()) + " vs kernel " +
                                shape_to_string(kernel.shape()));
  }
  if (d.k % 2 == 0) throw std::invalid_argument("conv1d_time kernel width must be odd");
  if (d.length + 2 * padding < d.k) throw std::invalid_argument("conv1d_time: sequence shorter than kernel");
  d.out_length = d.length + 2 * padding - d.k + 1;
  return d;
}

}  // namespace

Tensor conv1d_time(const Tensor& x, const Tensor& kernel, std::size_t padding, const Tensor* bias) {
  const ConvDims d = conv_dims(x, kernel, padding);
  if (bias && bias->size() != d.c_out) {
    throw std::invalid_argument("conv1d_time bias has " + std::to_string(bias->size()) + " entries, expected " +
                                std::to_string(d.c_out));
  }
  Tensor out = Tensor::matrix(d.out_length, d.c_out);
  const double* xs = x.data();
  const double* w = kernel.data();
  for (std::size_t t = 0; t < d.out_length; ++t) {
    double* row = out.data() + t * d.c_out;
    for (std::size_t o = 0; o < d.c_out; ++o) {
      double acc = bias ? (*bias)[o] : 0.0;
      for (std::size_t tap = 0; tap < d.k; ++tap) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + tap) - static_cast<std::ptrdiff_t>(padding);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(d.length)) continue;
        const double* xr = xs + static_cast<std::size_t>(src) * d.c_in;
        const double* wr = w + o * d.c_in * d.k + tap;
        for (std::size_t c = 0; c < d.c_in; ++c) acc += xr[c] * wr[c * d.k];
      }
      row[o] = acc;
    }
  }
  return out;
}

Conv1dGrads conv1d_time_backward(const Tensor& x, const Tensor& kernel, std::size_t padding, const Tensor& grad_out,
                                 bool with_bias) {
  const ConvDims d = conv_dims(x, kernel, padding);
  if (grad_out.rows() != d.out_length || grad_out.cols() != d.c_out) {
    throw std::invalid_argument("conv1d_time_backward: grad shape " + shape_to_string(grad_out.shape()));
  }
  Conv1dGrads g{Tensor(x.shape()), Tensor(kernel.shape()), with_bias ? Tensor({d.c_out}) : Tensor()};
  const double* xs = x.data();
  const double* w = kernel.data();
  double* gx = g.x.data();
  double* gw = g.kernel.data();
  for (std::size_t t = 0; t < d.out_length; ++t) {
    const double* go = grad_out.data() + t * d.c_out;
    for (std::size_t o = 0; o < d.c_out; ++o) {
      const double gv = go[o];
      if (with_bias) g.bias[o] += gv;
      if (gv == 0.0) continue;
      for (std::size_t tap = 0; tap < d.k; ++tap) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + tap) - static_cast<std::ptrdiff_t>(padding);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(d.length)) continue;
        const std::size_t base = static_cast<std::size_t>(src) * d.c_in;
        const std::size_t woff = o * d.c_in * d.k + tap;
        for (std::size_t c = 0; c < d.c_in; ++c) {
          gx[base + c] += gv * w[woff + c * d.k];
          gw[woff + c * d.k] += gv * xs[base + c];
        }
      }
    }
  }
  return g;
}

std::size_t pooled_length(std::size_t length, const PoolSpec& spec) {
  if (spec.kernel < 1 || spec.stride < 1) throw std::invalid_argument("pool1d: kernel and stride must be >= 1");
  if (2 * spec.padding > spec.kernel) throw std::invalid_argument("pool1d: padding must be at most half the kernel");
  if (length + 2 * spec.padding < spec.kernel) throw std::invalid_argument("sequence too short to pool");
  return (length + 2 * spec.padding - spec.kernel) / spec.stride + 1;
}

namespace {

// In-range [begin, end) for output position t.
std::pair<std::size_t, std::size_t> pool_window(std::size_t t, std::size_t length, const PoolSpec& spec) {
  const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * spec.stride) - static_cast<std::ptrdiff_t>(spec.padding);
  const std::ptrdiff_t stop = start + static_cast<std::ptrdiff_t>(spec.kernel);
  const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(start, 0));
  const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(stop, static_cast<std::ptrdiff_t>(length)));
  return {lo, hi};
}

}  // namespace

Tensor pool1d(const Tensor& x, const PoolSpec& spec) {
  require_matrix(x, "pool1d input");
  const std::size_t length = x.rows();
  const std::size_t channels = x.cols();
  const std::size_t out_length = pooled_length(length, spec);
  Tensor out = Tensor::matrix(out_length, channels);
  for (std::size_t t = 0; t < out_length; ++t) {
    const auto [lo, hi] = pool_window(t, length, spec);
    for (std::size_t c = 0; c < channels; ++c) {
      if (spec.kind == PoolKind::max) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t s = lo; s < hi; ++s) best = std::max(best, x(s, c));
        out(t, c) = best;
      } else {
        double sum = 0.0;
        for (std::size_t s = lo; s < hi; ++s) sum += x(s, c);
        out(t, c) = sum / static_cast<double>(hi - lo);
      }
    }
  }
  return out;
}

Tensor pool1d_backward(const Tensor& x, const PoolSpec& spec, const Tensor& grad_out) {
  const std::size_t length = x.rows();
  const std::size_t channels = x.cols();
  const std::size_t out_length = pooled_length(length, spec);
  if (grad_out.rows() != out_length || grad_out.cols() != channels) {
    throw std::invalid_argument("pool1d_backward: grad shape " + shape_to_string(grad_out.shape()));
  }
  Tensor gx(x.shape());
  for (std::size_t t = 0; t < out_length; ++t) {
    const auto [lo, hi] = pool_window(t, length, spec);
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = grad_out(t, c);
      if (spec.kind == PoolKind::max) {
        // First maximal element receives the gradient.
        std::size_t arg = lo;
        for (std::size_t s = lo + 1; s < hi; ++s) {
          if (x(s, c) > x(arg, c)) arg = s;
        }
        gx(arg, c) += g;
      } else {
        const double share = g / static_cast<double>(hi - lo);
        for (std::size_t s = lo; s < hi; ++s) gx(s, c) += share;
      }
    }
  }
  return gx;
}

Mask::Mask(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

Mask Mask::causal(std::size_t length) {
  Mask m(length, length);
  for (std::size_t r = 0; r < length; ++r) {
    for (std::size_t c = r + 1; c < length; ++c) m.forbid(r, c);
  }
  return m;
}

Mask Mask::causal_for_positions(std::span<const std::size_t> positions, std::size_t keys) {
  Mask m(positions.size(), keys);
  for (std::size_t r = 0; r < positions.size(); ++r) {
    for (std::size_t c = positions[r] + 1; c < keys; ++c) m.forbid(r, c);
  }
  return m;
}

Tensor softmax_lastdim(const Tensor& x, const Mask* mask) {
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  if (mask && (mask->rows() != rows || mask->cols() != width)) {
    throw std::invalid_argument("softmax mask shape [" + std::to_string(mask->rows()) + "x" +
                                std::to_string(mask->cols()) + "] does not match scores " + shape_to_string(x.shape()));
  }
  Tensor y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * width;
    double* out = y.data() + r * width;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < width; ++c) {
      if (mask && mask->forbidden(r, c)) continue;
      peak = std::max(peak, in[c]);
    }
    if (peak == -std::numeric_limits<double>::infinity()) throw std::invalid_argument("empty attention row");
    double total = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      if (mask && mask->forbidden(r, c)) {
        out[c] = 0.0;
        continue;
      }
      out[c] = std::exp(in[c] - peak);
      total += out[c];
    }
    for (std::size_t c = 0; c < width; ++c) out[c] /= total;
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& grad_y) {
  const std::size_t width = y.shape().back();
  const std::size_t rows = y.size() / width;
  Tensor gx(y.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y.data() + r * width;
    const double* gr = grad_y.data() + r * width;
    double dot = 0.0;
    for (std::size_t c = 0; c < width; ++c) dot += yr[c] * gr[c];
    double* out = gx.data() + r * width;
    for (std::size_t c = 0; c < width; ++c) out[c] = yr[c] * (gr[c] - dot);
  }
  return gx;
}

Tensor elu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows input");
  Tensor out = Tensor::matrix(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c);
  }
  for (std::size_t c = 0; c < x.cols(); ++c) out[c] /= static_cast<double>(x.rows());
  return out;
}

Tensor cumsum_rows(const Tensor& x) {
  require_matrix(x, "cumsum_rows input");
  Tensor out = x;
  for (std::size_t r = 1; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += out(r - 1, c);
  }
  return out;
}

}  // namespace higenet::ops
