#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "higenet/embedding.hpp"
#include "higenet/tensor.hpp"

namespace higenet {

using TimePoint = std::chrono::sys_seconds;

// "YYYY-MM-DD HH:MM[:SS]" (a 'T' separator is also accepted).
TimePoint parse_timestamp(std::string_view text);
std::string format_timestamp(TimePoint t);
TimeFeatures time_features(std::span<const TimePoint> stamps);

struct TimeSeriesFrame {
  std::vector<TimePoint> timestamps;
  std::vector<std::string> columns;
  Tensor values;  // [L × D]
  std::vector<std::string> targets;

  std::size_t length() const noexcept { return timestamps.size(); }
  std::size_t dims() const noexcept { return columns.size(); }
  std::size_t column_index(std::string_view name) const;
  std::chrono::seconds interval() const;
  TimeSeriesFrame slice(std::size_t begin, std::size_t count) const;
};

enum class CsvSchema { ett, aiops, generic };

CsvSchema parse_csv_schema(std::string_view name);
std::string_view csv_schema_name(CsvSchema schema);

// Column roster of the AIOps monitoring export, in file order.
const std::vector<std::string>& aiops_columns();
inline constexpr std::string_view kAiopsTarget = "RESP-TIME";
inline constexpr std::string_view kEttTarget = "OT";

TimeSeriesFrame parse_csv(std::istream& in, CsvSchema schema, std::string_view source = "<stream>");
TimeSeriesFrame load_csv(const std::string& path, CsvSchema schema);
void write_csv(std::ostream& out, const TimeSeriesFrame& frame);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// train = ⌊0.6·L⌋; the remainder is halved, the odd row going to test.
SplitSizes split_sizes_622(std::size_t length);

struct SplitFrames {
  TimeSeriesFrame train;
  TimeSeriesFrame val;
  TimeSeriesFrame test;
};

// Chronological 6:2:2 split; throws if any part is shorter than min_length.
SplitFrames split_622(const TimeSeriesFrame& frame, std::size_t min_length = 1);

enum class ScaleMode { standardize_per_dim, normalize_per_dim, standardize_global, normalize_global, none };
enum class FitScope { train_only, train_plus_test };

ScaleMode parse_scale_mode(std::string_view name);
std::string_view scale_mode_name(ScaleMode mode);
FitScope parse_fit_scope(std::string_view name);
std::string_view fit_scope_name(FitScope scope);

// Affine per-dimension transform x' = (x − offset) / scale. Standardisation
// uses the population standard deviation; normalisation uses min and range.
class StandardScaler {
 public:
  StandardScaler() = default;

  static StandardScaler fit(const Tensor& values, ScaleMode mode, std::span<const std::string> column_names = {});

  Tensor apply(const Tensor& values) const;
  Tensor inverse(const Tensor& values) const;
  // Inverse for a tensor whose columns are the listed source dimensions.
  Tensor inverse_columns(const Tensor& values, std::span<const std::size_t> columns) const;

  ScaleMode mode() const noexcept { return mode_; }
  std::span<const double> offsets() const noexcept { return offset_; }
  std::span<const double> scales() const noexcept { return scale_; }

 private:
  ScaleMode mode_ = ScaleMode::none;
  std::vector<double> offset_;
  std::vector<double> scale_;
};

struct ScaledSplits {
  SplitFrames frames;
  StandardScaler scaler;
};

ScaledSplits fit_apply_scaler(const SplitFrames& splits, ScaleMode mode, FitScope scope);

struct MetricReport {
  double corr = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
  bool corr_defined = true;
  std::vector<std::string> flags;
};

// MAE, MSE and Pearson CORR of one series. CORR is reported as 0 with the
// flag "corr_undefined" when either side has zero variance or n < 2.
MetricReport metrics(std::span<const double> truth, std::span<const double> prediction);
// Per-column metrics of [n × D] tensors, averaged across columns.
MetricReport metrics(const Tensor& truth, const Tensor& prediction);
std::string metrics_to_json(const MetricReport& report);

enum class FeatureMode { multivariate, univariate };

FeatureMode parse_feature_mode(std::string_view name);
std::string_view feature_mode_name(FeatureMode mode);

struct WindowSpec {
  std::size_t seq_len = 96;
  std::size_t label_len = 48;
  std::size_t pred_len = 24;
  std::size_t gap = 0;
  FeatureMode mode = FeatureMode::multivariate;
};

struct WindowSample {
  std::size_t start = 0;     // first encoder row within the source frame
  Tensor enc_values;         // [L_x × d_x]
  Tensor enc_targets;        // [L_x × d_y], target columns of the encoder window
  TimeFeatures enc_stamps;   // L_x rows
  TimeFeatures dec_stamps;   // label_len + L_y rows
  Tensor target;             // [L_y × d_y]
  std::vector<TimePoint> target_times;
};

// Lazily materialised stride-1 windows over one frame. The frame is shared.
class WindowSet {
 public:
  WindowSet(std::shared_ptr<const TimeSeriesFrame> frame, const WindowSpec& spec);

  std::size_t size() const noexcept { return count_; }
  WindowSample operator[](std::size_t index) const;
  std::size_t d_x() const noexcept { return input_columns_.size(); }
  std::size_t d_y() const noexcept { return target_columns_.size(); }
  std::span<const std::size_t> input_columns() const noexcept { return input_columns_; }
  std::span<const std::size_t> target_columns() const noexcept { return target_columns_; }
  const WindowSpec& spec() const noexcept { return spec_; }
  const TimeSeriesFrame& frame() const noexcept { return *frame_; }

 private:
  std::shared_ptr<const TimeSeriesFrame> frame_;
  WindowSpec spec_;
  std::size_t count_ = 0;
  std::vector<std::size_t> input_columns_;
  std::vector<std::size_t> target_columns_;
  TimeFeatures stamps_;
};

// count = L − L_x − gap − L_y + 1.
WindowSet make_windows(const TimeSeriesFrame& frame, const WindowSpec& spec);

// Sum of two sinusoids (periods 24 and 96 steps) with a per-dimension phase
// and amplitude plus Gaussian noise. Target is the last column.
TimeSeriesFrame synthetic_seasonal(std::size_t length, std::size_t dims, double noise, std::uint64_t seed,
                                   std::chrono::minutes interval = std::chrono::minutes{60});

// 20 columns named like the AIOps export at 5-minute spacing: daily cycles,
// slow drift and noise, with RESP-TIME driven by load and disk columns.
TimeSeriesFrame synthetic_aiops(std::size_t length, std::uint64_t seed);

}  // namespace higenet
