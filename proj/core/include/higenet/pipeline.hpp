#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "higenet/data.hpp"
#include "higenet/model.hpp"
#include "higenet/training.hpp"

namespace higenet {

// Where the series comes from: a CSV file, or a generator when `path` is empty.
struct DataConfig {
  std::string path;
  CsvSchema schema = CsvSchema::generic;
  FeatureMode mode = FeatureMode::multivariate;
  ScaleMode scale = ScaleMode::standardize_per_dim;
  FitScope scope = FitScope::train_only;
  std::string synthetic = "seasonal";  // "seasonal" or "aiops"
  std::size_t synthetic_length = 4000;
  std::size_t synthetic_dims = 3;
  double synthetic_noise = 0.1;
  std::uint64_t synthetic_seed = 0;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  std::size_t eval_windows = 0;  // 0: every test window
  bool original_units = false;
};

// Strict JSON config reader; unknown or mistyped keys are reported by path.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);

TimeSeriesFrame load_series(const DataConfig& config);

struct PreparedData {
  ScaledSplits scaled;
  WindowSet train;
  WindowSet val;
  WindowSet test;
};

// Split, scale and window a frame; fills d_x and d_y of `model`.
PreparedData prepare_data(const TimeSeriesFrame& frame, const DataConfig& data, ModelConfig& model);

struct TrainedModel {
  std::unique_ptr<ParamStore> params;
  HigeNet model;
};

TrainedModel build_model(const ModelConfig& config, std::uint64_t seed);

struct AblationVariant {
  std::string name;
  VariantToggles toggles;
};

// none, M0 (E), M1 (D), M2 (N), M3 (E+D), M4 (E+N), M5 (D+N), full.
const std::vector<AblationVariant>& ablation_variants();

struct AblationRow {
  std::string variant;
  VariantToggles toggles;
  std::size_t horizon = 0;
  bool failed = false;
  std::string error;
  double train_seconds = 0.0;
  std::size_t train_steps = 0;
  EvalReport test;
  // Provenance of the code paths this row exercised.
  std::string embedding;
  std::string distill;
  std::string encoder_kernel;
  std::string decoder_kernel;
  ForwardStats counters;  // one forward pass over the first test window
};

using AblationProgress = std::function<void(const AblationRow&)>;

std::vector<AblationRow> run_ablation(const TimeSeriesFrame& frame, const RunConfig& config,
                                      const std::vector<std::size_t>& horizons,
                                      const std::vector<AblationVariant>& variants = ablation_variants(),
                                      const AblationProgress& progress = {});

std::string ablation_to_json(const std::vector<AblationRow>& rows);
void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace higenet
