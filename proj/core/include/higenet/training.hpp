#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "higenet/data.hpp"
#include "higenet/model.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 5e-4;
  bool decoupled_weight_decay = true;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::size_t decay_every = 5;
  double decay_factor = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;          // 0: no cap beyond epochs
  std::size_t max_eval_windows = 0;   // 0: evaluate every validation window

  void validate() const;
};

// lr₀ · factor^⌊epoch / decay_every⌋.
double lr_schedule(const TrainConfig& config, std::size_t epoch);

struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamStore& params);
};

// One Adam update with bias correction. Decoupled weight decay shrinks θ by
// lr·wd before the moment update; otherwise wd·θ is added to the gradient.
void adam_step(ParamStore& params, OptimizerState& state, double lr, const TrainConfig& config);

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalReport {
  MetricReport metrics;   // per-window scores, averaged
  std::size_t windows = 0;
  std::size_t corr_undefined_windows = 0;
};

using Predictor = std::function<Tensor(const WindowSample&)>;

// Evaluates up to max_windows evenly spaced windows (0 = all).
EvalReport evaluate(const WindowSet& windows, const Predictor& predict, std::size_t max_windows = 0);
EvalReport evaluate(const HigeNet& model, ParamStore& params, const WindowSet& windows, std::size_t max_windows = 0);

// Repeats the last known target row across the horizon.
Tensor repeat_last_forecast(const WindowSample& sample, std::size_t pred_len);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::size_t steps = 0;
  double train_loss = 0.0;
  bool has_validation = false;
  EvalReport validation;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  std::size_t total_steps = 0;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
  double seconds = 0.0;
};

std::string history_to_json(const TrainHistory& history);

// Trains in place. With a validation set, the parameters of the epoch with the
// lowest validation MSE are restored at the end.
TrainHistory train_loop(const HigeNet& model, ParamStore& params, const WindowSet& train, const WindowSet* validation,
                        const TrainConfig& config);

// Checkpoint: "HGNT1", then per parameter name length, name, rank, extents
// (u64 little-endian) and little-endian doubles; trailing FNV-1a 64 of
// everything after the magic.
inline constexpr char kCheckpointMagic[] = "HGNT1";

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string checkpoint_bytes(const ParamStore& params);
void save_checkpoint(const ParamStore& params, const std::string& path);
// Loads values into an already-built store; names and shapes must match.
void load_checkpoint(ParamStore& params, const std::string& path);
void load_checkpoint_bytes(ParamStore& params, std::string_view bytes);

struct CheckpointEntry {
  std::string name;
  Shape shape;
};

struct CheckpointSummary {
  std::vector<CheckpointEntry> entries;
  std::size_t scalars = 0;
  std::uint64_t checksum = 0;
};

CheckpointSummary inspect_checkpoint(const std::string& path);
CheckpointSummary inspect_checkpoint_bytes(std::string_view bytes);

}  // namespace higenet
