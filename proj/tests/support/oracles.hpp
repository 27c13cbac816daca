#pragma once

// Brute-force reference implementations. Deliberately naive loops over
// nested vectors so they share no code with the library under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "higenet/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const higenet::Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

inline higenet::Tensor to_tensor(const Mat& m) {
  higenet::Tensor t = higenet::Tensor::matrix(m.size(), m.at(0).size());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c) t(r, c) = m[r][c];
  return t;
}

inline higenet::Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  higenet::Tensor t = higenet::Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

// One attention row: softmax over keys 0..limit-1 of q·k/√d, then Σ p_j v_j.
inline std::vector<double> attention_row(const Mat& q, const Mat& k, const Mat& v, std::size_t i, std::size_t limit) {
  const std::size_t d = q[i].size();
  std::vector<double> s(limit);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < limit; ++j) {
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += q[i][c] * k[j][c];
    s[j] = dot / std::sqrt(static_cast<double>(d));
    top = std::max(top, s[j]);
  }
  double z = 0.0;
  for (double& x : s) {
    x = std::exp(x - top);
    z += x;
  }
  std::vector<double> out(v[0].size(), 0.0);
  for (std::size_t j = 0; j < limit; ++j)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += s[j] / z * v[j][c];
  return out;
}

inline Mat dense_attention(const Mat& q, const Mat& k, const Mat& v, bool causal) {
  Mat out;
  for (std::size_t i = 0; i < q.size(); ++i) out.push_back(attention_row(q, k, v, i, causal ? i + 1 : k.size()));
  return out;
}

inline std::vector<double> column_means(const Mat& v) {
  std::vector<double> m(v[0].size(), 0.0);
  for (const auto& row : v)
    for (std::size_t c = 0; c < row.size(); ++c) m[c] += row[c];
  for (double& x : m) x /= static_cast<double>(v.size());
  return m;
}

inline Mat prefix_sums(const Mat& v) {
  Mat out = v;
  for (std::size_t r = 1; r < out.size(); ++r)
    for (std::size_t c = 0; c < out[r].size(); ++c) out[r][c] += out[r - 1][c];
  return out;
}

// Cross-correlation along time with zero padding; kernel[o][i][t].
inline Mat conv1d(const Mat& x, const std::vector<Mat>& kernel, std::size_t padding, const std::vector<double>* bias = nullptr) {
  const std::size_t L = x.size();
  const std::size_t width = kernel[0][0].size();
  const std::size_t out_len = L + 2 * padding - width + 1;
  Mat out(out_len, std::vector<double>(kernel.size(), 0.0));
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t o = 0; o < kernel.size(); ++o) {
      double acc = bias ? (*bias)[o] : 0.0;
      for (std::size_t i = 0; i < kernel[o].size(); ++i) {
        for (std::size_t w = 0; w < width; ++w) {
          const long src = static_cast<long>(t + w) - static_cast<long>(padding);
          if (src < 0 || src >= static_cast<long>(L)) continue;
          acc += kernel[o][i][w] * x[static_cast<std::size_t>(src)][i];
        }
      }
      out[t][o] = acc;
    }
  }
  return out;
}

inline std::vector<Mat> kernel_from_tensor(const higenet::Tensor& k) {
  std::vector<Mat> out(k.extent(0), Mat(k.extent(1), std::vector<double>(k.extent(2))));
  for (std::size_t o = 0; o < k.extent(0); ++o)
    for (std::size_t i = 0; i < k.extent(1); ++i)
      for (std::size_t w = 0; w < k.extent(2); ++w) out[o][i][w] = k[(o * k.extent(1) + i) * k.extent(2) + w];
  return out;
}

// Pool with padding positions excluded from both max and average.
inline Mat pool(const Mat& x, bool is_max, std::size_t kernel, std::size_t stride, std::size_t padding) {
  const long L = static_cast<long>(x.size());
  const std::size_t out_len = (x.size() + 2 * padding - kernel) / stride + 1;
  Mat out(out_len, std::vector<double>(x[0].size()));
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t c = 0; c < x[0].size(); ++c) {
      double best = -std::numeric_limits<double>::infinity();
      double sum = 0.0;
      int count = 0;
      for (std::size_t w = 0; w < kernel; ++w) {
        const long src = static_cast<long>(t * stride + w) - static_cast<long>(padding);
        if (src < 0 || src >= L) continue;
        best = std::max(best, x[static_cast<std::size_t>(src)][c]);
        sum += x[static_cast<std::size_t>(src)][c];
        ++count;
      }
      out[t][c] = is_max ? best : sum / count;
    }
  }
  return out;
}

inline double elu(double x) { return x > 0.0 ? x : std::exp(x) - 1.0; }

inline double pearson(const std::vector<double>& y, const std::vector<double>& p) {
  const double n = static_cast<double>(y.size());
  double my = 0, mp = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    my += y[i];
    mp += p[i];
  }
  my /= n;
  mp /= n;
  double num = 0, dy = 0, dp = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - my) * (p[i] - mp);
    dy += (y[i] - my) * (y[i] - my);
    dp += (p[i] - mp) * (p[i] - mp);
  }
  return num / std::sqrt(dy * dp);
}

}  // namespace oracle
