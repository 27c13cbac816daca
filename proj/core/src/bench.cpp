#include "higenet/bench.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <new>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace higenet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;
using HeadView = Eigen::Map<const RowMat, 0, Stride>;
using HeadOut = Eigen::Map<RowMat, 0, Stride>;
using Dense = Eigen::Map<RowMat>;
using Index = std::vector<std::size_t, TrackingAllocator<std::size_t>>;
using Clock = std::chrono::steady_clock;

double elapsed_ns(Clock::time_point since) {
  return std::chrono::duration<double, std::nano>(Clock::now() - since).count();
}

struct HeadSlices {
  HeadView q, k, v;
  HeadOut out;
};

HeadSlices head(const AttentionInputs& in, Buffer& out, std::size_t b, std::size_t h) {
  const auto L = static_cast<Eigen::Index>(in.seq_len);
  const auto D = static_cast<Eigen::Index>(in.dims);
  const Stride stride(static_cast<Eigen::Index>(in.width()));
  const std::size_t offset = b * in.seq_len * in.width() + h * in.dims;
  return {HeadView(in.q.data() + offset, L, D, stride), HeadView(in.k.data() + offset, L, D, stride),
          HeadView(in.v.data() + offset, L, D, stride), HeadOut(out.data() + offset, L, D, stride)};
}

void softmax_rows(Dense s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const double top = row.maxCoeff();
    row = (row.array() - top).exp();
    row /= row.sum();
  }
}

// n largest, ties to the lower index, ascending; `order` is scratch of length L.
void top_n(const double* scores, std::size_t stride, std::size_t length, std::size_t n, Index& order) {
  order.resize(length);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = scores[a * stride];
                      const double sb = scores[b * stride];
                      return sa > sb || (sa == sb && a < b);
                    });
  order.resize(n);
  std::sort(order.begin(), order.end());
}

// Dense rows for the selected queries; lazy rows get mean(V).
void attend_selected(HeadSlices hs, const Index& selected, double scale, Buffer& scores, Buffer& rows,
                     KernelRun& run) {
  const auto L = hs.k.rows();
  const auto D = hs.k.cols();
  const auto n = static_cast<Eigen::Index>(selected.size());
  auto t = Clock::now();
  Dense s(scores.data(), n, L);
  for (Eigen::Index i = 0; i < n; ++i) s.row(i).noalias() = hs.q.row(static_cast<Eigen::Index>(selected[i])) * hs.k.transpose();
  s *= scale;
  softmax_rows(s);
  run.t2_ns += elapsed_ns(t);

  t = Clock::now();
  Dense o(rows.data(), n, D);
  o.noalias() = s * hs.v;
  const Eigen::RowVectorXd mean = hs.v.colwise().mean();
  std::size_t next = 0;
  for (Eigen::Index r = 0; r < L; ++r) {
    if (next < selected.size() && selected[next] == static_cast<std::size_t>(r)) {
      hs.out.row(r) = o.row(static_cast<Eigen::Index>(next++));
    } else {
      hs.out.row(r) = mean;
    }
  }
  run.t3_ns += elapsed_ns(t);
  run.budget.dot_products += static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(L);
  run.budget.rows_selected += selected.size();
}

void run_canonical(const AttentionInputs& in, Buffer& out, KernelRun& run) {
  const auto L = static_cast<Eigen::Index>(in.seq_len);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.dims));
  Buffer scores(in.seq_len * in.seq_len);
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (std::size_t h = 0; h < in.heads; ++h) {
      HeadSlices hs = head(in, out, b, h);
      Dense s(scores.data(), L, L);
      auto t = Clock::now();
      s.noalias() = hs.q * hs.k.transpose();
      s *= scale;
      run.t1_ns += elapsed_ns(t);
      t = Clock::now();
      softmax_rows(s);
      run.t2_ns += elapsed_ns(t);
      t = Clock::now();
      hs.out.noalias() = s * hs.v;
      run.t3_ns += elapsed_ns(t);
      run.budget.dot_products += static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L);
      run.budget.rows_selected += in.seq_len;
    }
  }
}

void run_neural(const AttentionInputs& in, const ImportanceWeights& w, double c, Buffer& out, KernelRun& run) {
  if (w.heads != in.heads || w.width != in.width()) throw std::invalid_argument("importance weights do not match inputs");
  const std::size_t L = in.seq_len;
  const std::size_t C = in.width();
  const std::size_t H = in.heads;
  const std::size_t n = top_n_count(L, c);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.dims));
  Buffer importance(L * H);
  Buffer scores(n * L);
  Buffer rows(n * in.dims);
  Index order;
  order.reserve(L);
  for (std::size_t b = 0; b < in.batch; ++b) {
    // I = conv1d(Q + K) over all heads at once; the sum is formed on the fly.
    auto t = Clock::now();
    const double* q = in.q.data() + b * L * C;
    const double* k = in.k.data() + b * L * C;
    for (std::size_t l = 0; l < L; ++l) {
      double* dst = importance.data() + l * H;
      for (std::size_t h = 0; h < H; ++h) dst[h] = w.bias[h];
      for (std::size_t tap = 0; tap < 3; ++tap) {
        if ((l == 0 && tap == 0) || (l + 1 == L && tap == 2)) continue;
        const std::size_t src = l + tap - 1;
        const Eigen::Map<const Eigen::VectorXd> qs(q + src * C, static_cast<Eigen::Index>(C));
        const Eigen::Map<const Eigen::VectorXd> ks(k + src * C, static_cast<Eigen::Index>(C));
        for (std::size_t h = 0; h < H; ++h) {
          const Eigen::Map<const Eigen::VectorXd> wt(w.taps.data() + (tap * H + h) * C, static_cast<Eigen::Index>(C));
          dst[h] += wt.dot(qs) + wt.dot(ks);
        }
      }
    }
    run.t1_ns += elapsed_ns(t);
    for (std::size_t h = 0; h < H; ++h) {
      t = Clock::now();
      top_n(importance.data() + h, H, L, n, order);
      run.t2_ns += elapsed_ns(t);
      attend_selected(head(in, out, b, h), order, scale, scores, rows, run);
    }
  }
}

void run_prob(const AttentionInputs& in, double c, Rng& rng, Buffer& out, KernelRun& run) {
  const std::size_t L = in.seq_len;
  const std::size_t n = top_n_count(L, c);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.dims));
  Buffer measure(L);
  Buffer sampled_scores(L * top_n_count(L, c));
  Buffer scores(n * L);
  Buffer rows(n * in.dims);
  Index order;
  order.reserve(L);
  Index pool;
  pool.reserve(L);
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (std::size_t h = 0; h < in.heads; ++h) {
      HeadSlices hs = head(in, out, b, h);
      auto t = Clock::now();
      const std::size_t u = top_n_count(L, c);
      pool.resize(L);
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t i = 0; i < u; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, L - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      Dense s(sampled_scores.data(), static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(u));
      for (std::size_t j = 0; j < u; ++j) {
        s.col(static_cast<Eigen::Index>(j)).noalias() = hs.q * hs.k.row(static_cast<Eigen::Index>(pool[j])).transpose();
      }
      for (std::size_t i = 0; i < L; ++i) {
        const auto row = s.row(static_cast<Eigen::Index>(i));
        measure[i] = scale * (row.maxCoeff() - row.mean());
      }
      run.budget.dot_products += static_cast<std::uint64_t>(L) * u;
      run.t1_ns += elapsed_ns(t);
      t = Clock::now();
      top_n(measure.data(), 1, L, n, order);
      run.t2_ns += elapsed_ns(t);
      attend_selected(hs, order, scale, scores, rows, run);
    }
  }
}

}  // namespace

std::string_view bench_kernel_name(BenchKernel kernel) {
  switch (kernel) {
    case BenchKernel::canonical: return "canonical";
    case BenchKernel::prob_sparse: return "prob_sparse";
    case BenchKernel::neural_sparse: return "neural_sparse";
  }
  return "canonical";
}

BenchKernel parse_bench_kernel(std::string_view name) {
  for (auto k : {BenchKernel::canonical, BenchKernel::prob_sparse, BenchKernel::neural_sparse}) {
    if (bench_kernel_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown benchmark kernel '" + std::string(name) + "'");
}

AttentionInputs AttentionInputs::random(std::size_t batch, std::size_t seq_len, std::size_t heads, std::size_t dims,
                                        Rng& rng) {
  if (batch == 0 || seq_len == 0 || heads == 0 || dims == 0) throw std::invalid_argument("attention inputs need positive extents");
  AttentionInputs in{batch, seq_len, heads, dims, {}, {}, {}};
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Buffer* buf : {&in.q, &in.k, &in.v}) {
    buf->resize(in.elements());
    for (double& x : *buf) x = dist(rng);
  }
  return in;
}

ImportanceWeights ImportanceWeights::random(std::size_t heads, std::size_t width, Rng& rng) {
  ImportanceWeights w{heads, width, Buffer(3 * heads * width), Buffer(heads)};
  const double bound = std::sqrt(1.0 / static_cast<double>(3 * width));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : w.taps) x = dist(rng);
  for (double& x : w.bias) x = dist(rng);
  return w;
}

ImportanceWeights ImportanceWeights::from_kernel(const Tensor& kernel, const Tensor* bias) {
  if (kernel.rank() != 3 || kernel.extent(2) != 3) {
    throw std::invalid_argument("importance kernel must be [heads × width × 3], got " + shape_to_string(kernel.shape()));
  }
  const std::size_t H = kernel.extent(0);
  const std::size_t C = kernel.extent(1);
  ImportanceWeights w{H, C, Buffer(3 * H * C), Buffer(H, 0.0)};
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < 3; ++t) w.taps[(t * H + h) * C + c] = kernel[(h * C + c) * 3 + t];
    }
    if (bias) w.bias[h] = (*bias)[h];
  }
  return w;
}

KernelRun run_attention_kernel(BenchKernel kernel, const AttentionInputs& inputs, const ImportanceWeights& weights,
                               double c, Rng& rng, Buffer& out) {
  if (out.size() != inputs.elements()) throw std::invalid_argument("output buffer does not match the inputs");
  KernelRun run;
  const std::size_t baseline = AllocationTracker::live_bytes();
  AllocationTracker::reset_peak();
  const auto start = Clock::now();
  switch (kernel) {
    case BenchKernel::canonical: run_canonical(inputs, out, run); break;
    case BenchKernel::neural_sparse: run_neural(inputs, weights, c, out, run); break;
    case BenchKernel::prob_sparse: run_prob(inputs, c, rng, out, run); break;
  }
  run.total_ns = elapsed_ns(start);
  run.peak_bytes = AllocationTracker::peak_bytes() - baseline;
  return run;
}

namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace

std::vector<BenchRecord> bench_attention(const BenchOptions& options, const BenchProgress& progress) {
  if (options.repeats == 0) throw std::invalid_argument("repeats must be positive");
  std::vector<BenchRecord> records;
  for (BenchKernel kernel : options.kernels) {
    for (std::size_t batch : options.batches) {
      for (std::size_t seq_len : options.seq_lens) {
        BenchRecord rec;
        rec.kernel = std::string(bench_kernel_name(kernel));
        rec.batch = batch;
        rec.seq_len = seq_len;
        rec.heads = options.heads;
        rec.dims = options.dims;
        try {
          // Same inputs for every kernel at a given shape.
          Rng data_rng(options.seed ^ (batch * 1000003ULL + seq_len));
          const AttentionInputs inputs = AttentionInputs::random(batch, seq_len, options.heads, options.dims, data_rng);
          const ImportanceWeights weights = ImportanceWeights::random(options.heads, inputs.width(), data_rng);
          Buffer out(inputs.elements());
          std::vector<double> totals, t1, t2, t3;
          for (std::size_t r = 0; r < options.warmup + options.repeats; ++r) {
            Rng kernel_rng(options.seed + 17);
            const KernelRun run = run_attention_kernel(kernel, inputs, weights, options.c, kernel_rng, out);
            if (r < options.warmup) continue;
            totals.push_back(run.total_ns);
            t1.push_back(run.t1_ns);
            t2.push_back(run.t2_ns);
            t3.push_back(run.t3_ns);
            rec.dot_products = run.budget.dot_products;
            rec.peak_bytes = std::max(rec.peak_bytes, run.peak_bytes);
          }
          rec.median_ns = median(totals);
          rec.t1_ns = median(t1);
          rec.t2_ns = median(t2);
          rec.t3_ns = median(t3);
        } catch (const std::bad_alloc&) {
          rec.failed = true;
          rec.median_ns = -1.0;
          rec.error = "out of memory";
        }
        if (progress) progress(rec);
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kBenchCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.kernel << ',' << r.batch << ',' << r.seq_len << ',' << r.heads << ',' << r.dims << ','
        << static_cast<long long>(std::llround(r.median_ns)) << ',' << r.dot_products << ',' << r.peak_bytes << ','
        << static_cast<long long>(std::llround(r.t1_ns)) << ',' << static_cast<long long>(std::llround(r.t2_ns)) << ','
        << static_cast<long long>(std::llround(r.t3_ns)) << '\n';
  }
}

}  // namespace higenet
