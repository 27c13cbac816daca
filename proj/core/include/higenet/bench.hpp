#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "higenet/attention.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

enum class BenchKernel { canonical, prob_sparse, neural_sparse };

std::string_view bench_kernel_name(BenchKernel kernel);
BenchKernel parse_bench_kernel(std::string_view name);

// Q, K, V laid out as (batch, seq_len, heads, dims), row-major. Head h of
// batch item b is a strided [seq_len × dims] view with row stride heads·dims.
struct AttentionInputs {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t heads = 0;
  std::size_t dims = 0;
  Buffer q;
  Buffer k;
  Buffer v;

  std::size_t width() const noexcept { return heads * dims; }
  std::size_t elements() const noexcept { return batch * seq_len * width(); }
  static AttentionInputs random(std::size_t batch, std::size_t seq_len, std::size_t heads, std::size_t dims, Rng& rng);
};

// Query-importance conv over the full model width, stored tap-major as
// [3 × heads × heads·dims] so each tap/head row is contiguous.
struct ImportanceWeights {
  std::size_t heads = 0;
  std::size_t width = 0;
  Buffer taps;
  Buffer bias;

  static ImportanceWeights random(std::size_t heads, std::size_t width, Rng& rng);
  // Converts a [heads × width × 3] conv kernel.
  static ImportanceWeights from_kernel(const Tensor& kernel, const Tensor* bias = nullptr);
};

struct KernelRun {
  ScoreBudget budget;
  std::size_t peak_bytes = 0;  // transient bytes above the live baseline
  double t1_ns = 0.0;          // scoring
  double t2_ns = 0.0;          // selection and softmax
  double t3_ns = 0.0;          // weighted aggregation and lazy fill
  double total_ns = 0.0;
};

// Runs one kernel over every (batch, head) pair. `out` must hold
// inputs.elements() doubles; it is allocated by the caller so it does not
// count as transient memory.
KernelRun run_attention_kernel(BenchKernel kernel, const AttentionInputs& inputs, const ImportanceWeights& weights,
                               double c, Rng& rng, Buffer& out);

struct BenchRecord {
  std::string kernel;
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t heads = 0;
  std::size_t dims = 0;
  double median_ns = -1.0;
  std::uint64_t dot_products = 0;
  std::size_t peak_bytes = 0;
  double t1_ns = 0.0;
  double t2_ns = 0.0;
  double t3_ns = 0.0;
  bool failed = false;
  std::string error;
};

struct BenchOptions {
  std::vector<std::size_t> batches{1, 4, 16, 32, 64};
  std::vector<std::size_t> seq_lens{64, 128, 256, 512, 768, 1024};
  std::vector<BenchKernel> kernels{BenchKernel::canonical, BenchKernel::prob_sparse, BenchKernel::neural_sparse};
  std::size_t heads = 8;
  std::size_t dims = 64;
  std::size_t repeats = 5;
  std::size_t warmup = 1;
  double c = 5.0;
  std::uint64_t seed = 0;
};

using BenchProgress = std::function<void(const BenchRecord&)>;

// One record per (kernel, batch, seq_len), in that nesting order.
std::vector<BenchRecord> bench_attention(const BenchOptions& options, const BenchProgress& progress = {});

inline constexpr std::string_view kBenchCsvHeader =
    "kernel,batch,seq_len,heads,dims,median_ns,dot_products,peak_bytes,t1_ns,t2_ns,t3_ns";

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records);

}  // namespace higenet
