#include "higenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace higenet {

namespace {

template <class Int>
Int parse_int(std::string_view text, std::string_view whole) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("invalid timestamp '" + std::string(whole) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::vector<std::string>& ett_columns() {
  static const std::vector<std::string> cols{"HUFL", "HULL", "MUFL", "MULL", "LUFL", "LULL", "OT"};
  return cols;
}

}  // namespace

TimePoint parse_timestamp(std::string_view text) {
  text = trim(text);
  // YYYY-MM-DD[ T]HH:MM[:SS]
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != ' ' && text[10] != 'T') ||
      text[13] != ':') {
    throw std::invalid_argument("invalid timestamp '" + std::string(text) + "'");
  }
  const int year = parse_int<int>(text.substr(0, 4), text);
  const unsigned month = parse_int<unsigned>(text.substr(5, 2), text);
  const unsigned day = parse_int<unsigned>(text.substr(8, 2), text);
  const int hour = parse_int<int>(text.substr(11, 2), text);
  const int minute = parse_int<int>(text.substr(14, 2), text);
  int second = 0;
  if (text.size() > 16) {
    if (text.size() != 19 || text[16] != ':') throw std::invalid_argument("invalid timestamp '" + std::string(text) + "'");
    second = parse_int<int>(text.substr(17, 2), text);
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) {
    throw std::invalid_argument("invalid timestamp '" + std::string(text) + "'");
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
         std::chrono::seconds{second};
}

std::string format_timestamp(TimePoint t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{t - days};
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimeFeatures time_features(std::span<const TimePoint> stamps) {
  TimeFeatures f(stamps.size());
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    const auto days = std::chrono::floor<std::chrono::days>(stamps[i]);
    const std::chrono::year_month_day ymd{days};
    const std::chrono::hh_mm_ss hms{stamps[i] - days};
    // Monday = 0.
    const unsigned weekday = (std::chrono::weekday{days}.c_encoding() + 6) % 7;
    f.set(i, StampCategory::month, static_cast<int>(static_cast<unsigned>(ymd.month())));
    f.set(i, StampCategory::day, static_cast<int>(static_cast<unsigned>(ymd.day())));
    f.set(i, StampCategory::weekday, static_cast<int>(weekday));
    f.set(i, StampCategory::hour, static_cast<int>(hms.hours().count()));
    f.set(i, StampCategory::minute_bucket, static_cast<int>(hms.minutes().count() / 15));
  }
  return f;
}

std::size_t TimeSeriesFrame::column_index(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::chrono::seconds TimeSeriesFrame::interval() const {
  if (timestamps.size() < 2) return std::chrono::seconds{0};
  return timestamps[1] - timestamps[0];
}

TimeSeriesFrame TimeSeriesFrame::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > length()) {
    throw std::out_of_range("frame slice [" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " +
                            std::to_string(length()) + " rows");
  }
  TimeSeriesFrame out;
  out.columns = columns;
  out.targets = targets;
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(begin + count));
  const std::size_t d = dims();
  out.values = Tensor({count, d}, std::span<const double>(values.data() + begin * d, count * d));
  return out;
}

CsvSchema parse_csv_schema(std::string_view name) {
  if (name == "ett") return CsvSchema::ett;
  if (name == "aiops") return CsvSchema::aiops;
  if (name == "generic") return CsvSchema::generic;
  throw std::invalid_argument("unknown csv schema '" + std::string(name) + "'");
}

std::string_view csv_schema_name(CsvSchema schema) {
  switch (schema) {
    case CsvSchema::ett: return "ett";
    case CsvSchema::aiops: return "aiops";
    case CsvSchema::generic: return "generic";
  }
  return "generic";
}

const std::vector<std::string>& aiops_columns() {
  static const std::vector<std::string> cols{
      "SP1A-DASD-RESP", "SP1A-DASD-RATE", "SP1B-DASD-RESP", "SP1B-DASD-RATE", "SP1C-DASD-RESP",
      "SP1C-DASD-RATE", "SP1D-DASD-RESP", "SP1D-DASD-RATE", "SP1A-MEM",       "SP1B-MEM",
      "SP1C-MEM",       "SP1D-MEM",       "N-TASKS",        "TPS",            "SP1A-THOUT",
      "SP1B-THOUT",     "SP1C-THOUT",     "SP1D-THOUT",     "SYSPLEX-MIPS",   "RESP-TIME"};
  return cols;
}

TimeSeriesFrame parse_csv(std::istream& in, CsvSchema schema, std::string_view source) {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(where + ": empty csv");
  const auto header = split_commas(line);
  if (header.size() < 2) throw std::invalid_argument(where + ": need a timestamp column and at least one value column");

  TimeSeriesFrame frame;
  for (std::size_t c = 1; c < header.size(); ++c) frame.columns.emplace_back(header[c]);
  const std::size_t dims = frame.columns.size();

  switch (schema) {
    case CsvSchema::ett:
      if (dims != ett_columns().size()) {
        throw std::invalid_argument(where + ": ett schema expects 7 value columns, found " + std::to_string(dims));
      }
      if (std::find(frame.columns.begin(), frame.columns.end(), kEttTarget) == frame.columns.end()) {
        throw std::invalid_argument(where + ": ett schema requires an OT column");
      }
      frame.targets = {std::string(kEttTarget)};
      break;
    case CsvSchema::aiops:
      if (dims != aiops_columns().size()) {
        throw std::invalid_argument(where + ": aiops schema expects 20 value columns, found " + std::to_string(dims));
      }
      frame.targets = {std::find(frame.columns.begin(), frame.columns.end(), kAiopsTarget) != frame.columns.end()
                           ? std::string(kAiopsTarget)
                           : frame.columns.back()};
      break;
    case CsvSchema::generic:
      frame.targets = {frame.columns.back()};
      break;
  }

  std::vector<double> flat;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(where + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(header.size()));
    }
    frame.timestamps.push_back(parse_timestamp(cells[0]));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (cells[c].empty() || ec != std::errc{} || ptr != cells[c].data() + cells[c].size() || !std::isfinite(v)) {
        throw std::invalid_argument(where + ": non-numeric cell '" + std::string(cells[c]) + "' at row " +
                                    std::to_string(row) + " column '" + frame.columns[c - 1] + "'");
      }
      flat.push_back(v);
    }
  }
  if (frame.timestamps.empty()) throw std::invalid_argument(where + ": no data rows");

  if (frame.timestamps.size() >= 2) {
    const auto step = frame.timestamps[1] - frame.timestamps[0];
    if (step.count() <= 0) throw std::invalid_argument(where + ": timestamps must be strictly increasing (row 2)");
    for (std::size_t i = 2; i < frame.timestamps.size(); ++i) {
      const auto d = frame.timestamps[i] - frame.timestamps[i - 1];
      if (d.count() <= 0) {
        throw std::invalid_argument(where + ": timestamps must be strictly increasing (row " + std::to_string(i + 1) + ")");
      }
      if (d != step) throw std::invalid_argument(where + ": irregular timestamp spacing at row " + std::to_string(i + 1));
    }
  }
  frame.values = Tensor({frame.timestamps.size(), dims}, flat);
  return frame;
}

TimeSeriesFrame load_csv(const std::string& path, CsvSchema schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_csv(in, schema, path);
}

void write_csv(std::ostream& out, const TimeSeriesFrame& frame) {
  out << "date";
  for (const auto& c : frame.columns) out << ',' << c;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < frame.length(); ++r) {
    out << format_timestamp(frame.timestamps[r]);
    for (std::size_t c = 0; c < frame.dims(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof(buf), frame.values(r, c));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

SplitSizes split_sizes_622(std::size_t length) {
  SplitSizes s;
  s.train = length * 6 / 10;
  const std::size_t rest = length - s.train;
  s.val = rest / 2;
  s.test = rest - s.val;
  return s;
}

SplitFrames split_622(const TimeSeriesFrame& frame, std::size_t min_length) {
  const SplitSizes s = split_sizes_622(frame.length());
  auto check = [&](std::size_t n, const char* part) {
    if (n < std::max<std::size_t>(min_length, 1)) {
      throw std::invalid_argument(std::string(part) + " split has " + std::to_string(n) + " rows, fewer than the " +
                                  std::to_string(min_length) + " needed for one window");
    }
  };
  check(s.train, "train");
  check(s.val, "val");
  check(s.test, "test");
  return {frame.slice(0, s.train), frame.slice(s.train, s.val), frame.slice(s.train + s.val, s.test)};
}

ScaleMode parse_scale_mode(std::string_view name) {
  for (auto m : {ScaleMode::standardize_per_dim, ScaleMode::normalize_per_dim, ScaleMode::standardize_global,
                 ScaleMode::normalize_global, ScaleMode::none}) {
    if (scale_mode_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown preprocessing mode '" + std::string(name) + "'");
}

std::string_view scale_mode_name(ScaleMode mode) {
  switch (mode) {
    case ScaleMode::standardize_per_dim: return "standardize_per_dim";
    case ScaleMode::normalize_per_dim: return "normalize_per_dim";
    case ScaleMode::standardize_global: return "standardize_global";
    case ScaleMode::normalize_global: return "normalize_global";
    case ScaleMode::none: return "none";
  }
  return "none";
}

FitScope parse_fit_scope(std::string_view name) {
  if (name == "train_only") return FitScope::train_only;
  if (name == "train_plus_test") return FitScope::train_plus_test;
  throw std::invalid_argument("unknown scaler scope '" + std::string(name) + "'");
}

std::string_view fit_scope_name(FitScope scope) {
  return scope == FitScope::train_only ? "train_only" : "train_plus_test";
}

StandardScaler StandardScaler::fit(const Tensor& values, ScaleMode mode, std::span<const std::string> column_names) {
  require_matrix(values, "scaler input");
  const std::size_t n = values.rows();
  const std::size_t d = values.cols();
  StandardScaler s;
  s.mode_ = mode;
  s.offset_.assign(d, 0.0);
  s.scale_.assign(d, 1.0);
  auto column_label = [&](std::size_t c) {
    return c < column_names.size() ? "'" + column_names[c] + "'" : "#" + std::to_string(c);
  };
  auto require_spread = [&](double spread, const std::string& what) {
    if (!(spread > 1e-12)) throw std::invalid_argument("zero-variance " + what + " cannot be scaled");
  };

  switch (mode) {
    case ScaleMode::none:
      break;
    case ScaleMode::standardize_per_dim:
      for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += values(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += (values(r, c) - mean) * (values(r, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        require_spread(sd, "column " + column_label(c));
        s.offset_[c] = mean;
        s.scale_[c] = sd;
      }
      break;
    case ScaleMode::normalize_per_dim:
      for (std::size_t c = 0; c < d; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r = 0; r < n; ++r) {
          lo = std::min(lo, values(r, c));
          hi = std::max(hi, values(r, c));
        }
        require_spread(hi - lo, "column " + column_label(c));
        s.offset_[c] = lo;
        s.scale_[c] = hi - lo;
      }
      break;
    case ScaleMode::standardize_global: {
      double mean = 0.0;
      for (double v : values.values()) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values.values()) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(values.size()));
      require_spread(sd, "data");
      s.offset_.assign(d, mean);
      s.scale_.assign(d, sd);
      break;
    }
    case ScaleMode::normalize_global: {
      const auto [lo, hi] = std::minmax_element(values.values().begin(), values.values().end());
      require_spread(*hi - *lo, "data");
      s.offset_.assign(d, *lo);
      s.scale_.assign(d, *hi - *lo);
      break;
    }
  }
  return s;
}

Tensor StandardScaler::apply(const Tensor& values) const {
  require_matrix(values, "scaler input");
  if (values.cols() != offset_.size()) throw std::invalid_argument("scaler fitted on a different number of columns");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - offset_[c]) / scale_[c];
  }
  return out;
}

Tensor StandardScaler::inverse(const Tensor& values) const {
  std::vector<std::size_t> cols(offset_.size());
  for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = c;
  return inverse_columns(values, cols);
}

Tensor StandardScaler::inverse_columns(const Tensor& values, std::span<const std::size_t> columns) const {
  require_matrix(values, "scaler input");
  if (values.cols() != columns.size()) throw std::invalid_argument("inverse_columns: column count mismatch");
  Tensor out = values;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const std::size_t src = columns[c];
      out(r, c) = out(r, c) * scale_.at(src) + offset_.at(src);
    }
  }
  return out;
}

ScaledSplits fit_apply_scaler(const SplitFrames& splits, ScaleMode mode, FitScope scope) {
  Tensor fit_values = splits.train.values;
  if (scope == FitScope::train_plus_test) {
    const std::size_t d = splits.train.dims();
    std::vector<double> joined(splits.train.values.values().begin(), splits.train.values.values().end());
    joined.insert(joined.end(), splits.test.values.values().begin(), splits.test.values.values().end());
    fit_values = Tensor({splits.train.length() + splits.test.length(), d}, joined);
  }
  ScaledSplits out{splits, StandardScaler::fit(fit_values, mode, splits.train.columns)};
  out.frames.train.values = out.scaler.apply(splits.train.values);
  out.frames.val.values = out.scaler.apply(splits.val.values);
  out.frames.test.values = out.scaler.apply(splits.test.values);
  return out;
}

MetricReport metrics(std::span<const double> truth, std::span<const double> prediction) {
  if (truth.size() != prediction.size()) {
    throw std::invalid_argument("metrics: " + std::to_string(truth.size()) + " truth values vs " +
                                std::to_string(prediction.size()) + " predictions");
  }
  if (truth.empty()) throw std::invalid_argument("metrics: empty series");
  const std::size_t n = truth.size();
  MetricReport r;
  r.n = n;
  double mean_y = 0.0;
  double mean_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = prediction[i] - truth[i];
    r.mae += std::abs(d);
    r.mse += d * d;
    mean_y += truth[i];
    mean_p += prediction[i];
  }
  r.mae /= static_cast<double>(n);
  r.mse /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  mean_p /= static_cast<double>(n);
  double cov = 0.0;
  double var_y = 0.0;
  double var_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dy = truth[i] - mean_y;
    const double dp = prediction[i] - mean_p;
    cov += dy * dp;
    var_y += dy * dy;
    var_p += dp * dp;
  }
  if (n < 2 || var_y <= 0.0 || var_p <= 0.0) {
    r.corr = 0.0;
    r.corr_defined = false;
    r.flags.emplace_back("corr_undefined");
  } else {
    r.corr = cov / (std::sqrt(var_y) * std::sqrt(var_p));
  }
  return r;
}

MetricReport metrics(const Tensor& truth, const Tensor& prediction) {
  require_matrix(truth, "metrics truth");
  require_matrix(prediction, "metrics prediction");
  if (truth.shape() != prediction.shape()) {
    throw std::invalid_argument("metrics: shape mismatch " + shape_to_string(truth.shape()) + " vs " +
                                shape_to_string(prediction.shape()));
  }
  const std::size_t n = truth.rows();
  const std::size_t d = truth.cols();
  MetricReport total;
  total.n = n;
  std::vector<double> y(n);
  std::vector<double> p(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      y[r] = truth(r, c);
      p[r] = prediction(r, c);
    }
    const MetricReport col = metrics(y, p);
    total.corr += col.corr;
    total.mse += col.mse;
    total.mae += col.mae;
    if (!col.corr_defined) total.corr_defined = false;
  }
  total.corr /= static_cast<double>(d);
  total.mse /= static_cast<double>(d);
  total.mae /= static_cast<double>(d);
  if (!total.corr_defined) total.flags.emplace_back("corr_undefined");
  return total;
}

std::string metrics_to_json(const MetricReport& report) {
  nlohmann::json j{{"corr", report.corr}, {"mse", report.mse}, {"mae", report.mae}, {"n", report.n},
                   {"flags", report.flags}};
  return j.dump(2);
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "M" || name == "multivariate") return FeatureMode::multivariate;
  if (name == "S" || name == "univariate") return FeatureMode::univariate;
  throw std::invalid_argument("unknown feature mode '" + std::string(name) + "'");
}

std::string_view feature_mode_name(FeatureMode mode) {
  return mode == FeatureMode::multivariate ? "multivariate" : "univariate";
}

WindowSet::WindowSet(std::shared_ptr<const TimeSeriesFrame> frame, const WindowSpec& spec)
    : frame_(std::move(frame)), spec_(spec) {
  if (spec_.seq_len == 0 || spec_.pred_len == 0) throw std::invalid_argument("window lengths must be positive");
  if (spec_.label_len > spec_.seq_len) {
    throw std::invalid_argument("label_len " + std::to_string(spec_.label_len) + " exceeds seq_len " +
                                std::to_string(spec_.seq_len));
  }
  const std::size_t span = spec_.seq_len + spec_.gap + spec_.pred_len;
  if (frame_->length() < span) {
    throw std::invalid_argument("frame of " + std::to_string(frame_->length()) + " rows is too short for windows of " +
                                std::to_string(span));
  }
  count_ = frame_->length() - span + 1;
  if (spec_.mode == FeatureMode::multivariate) {
    for (std::size_t c = 0; c < frame_->dims(); ++c) input_columns_.push_back(c);
    target_columns_ = input_columns_;
  } else {
    if (frame_->targets.empty()) throw std::invalid_argument("univariate mode needs a target column");
    input_columns_ = {frame_->column_index(frame_->targets.front())};
    target_columns_ = input_columns_;
  }
  stamps_ = time_features(frame_->timestamps);
}

WindowSample WindowSet::operator[](std::size_t index) const {
  if (index >= count_) throw std::out_of_range("window index " + std::to_string(index));
  const TimeSeriesFrame& f = *frame_;
  auto pick = [&](std::size_t begin, std::size_t rows, std::span<const std::size_t> cols) {
    Tensor out = Tensor::matrix(rows, cols.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = f.values(begin + r, cols[c]);
    }
    return out;
  };
  WindowSample s;
  s.start = index;
  const std::size_t enc_end = index + spec_.seq_len;
  const std::size_t target_begin = enc_end + spec_.gap;
  s.enc_values = pick(index, spec_.seq_len, input_columns_);
  s.enc_targets = pick(index, spec_.seq_len, target_columns_);
  s.enc_stamps = stamps_.slice(index, spec_.seq_len);
  s.target = pick(target_begin, spec_.pred_len, target_columns_);
  TimeFeatures label = stamps_.slice(enc_end - spec_.label_len, spec_.label_len);
  s.dec_stamps = TimeFeatures::concat(label, stamps_.slice(target_begin, spec_.pred_len));
  s.target_times.assign(f.timestamps.begin() + static_cast<std::ptrdiff_t>(target_begin),
                        f.timestamps.begin() + static_cast<std::ptrdiff_t>(target_begin + spec_.pred_len));
  return s;
}

WindowSet make_windows(const TimeSeriesFrame& frame, const WindowSpec& spec) {
  return WindowSet(std::make_shared<const TimeSeriesFrame>(frame), spec);
}

namespace {

std::vector<TimePoint> regular_stamps(std::size_t length, std::chrono::minutes interval) {
  const TimePoint origin = std::chrono::sys_days{std::chrono::year{2021} / 1 / 1};
  std::vector<TimePoint> stamps(length);
  for (std::size_t i = 0; i < length; ++i) stamps[i] = origin + interval * static_cast<long>(i);
  return stamps;
}

}  // namespace

TimeSeriesFrame synthetic_seasonal(std::size_t length, std::size_t dims, double noise, std::uint64_t seed,
                                   std::chrono::minutes interval) {
  if (length == 0 || dims == 0) throw std::invalid_argument("synthetic series needs positive length and dims");
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::normal_distribution<double> eps(0.0, 1.0);
  std::vector<double> p1(dims), p2(dims), a1(dims), a2(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    p1[d] = phase(rng);
    p2[d] = phase(rng);
    a1[d] = amp(rng);
    a2[d] = 0.5 * amp(rng);
  }
  TimeSeriesFrame f;
  f.timestamps = regular_stamps(length, interval);
  for (std::size_t d = 0; d < dims; ++d) f.columns.push_back("x" + std::to_string(d));
  f.targets = {f.columns.back()};
  f.values = Tensor::matrix(length, dims);
  const double w1 = 2.0 * std::numbers::pi / 24.0;
  const double w2 = 2.0 * std::numbers::pi / 96.0;
  for (std::size_t t = 0; t < length; ++t) {
    const double tt = static_cast<double>(t);
    for (std::size_t d = 0; d < dims; ++d) {
      f.values(t, d) = a1[d] * std::sin(w1 * tt + p1[d]) + a2[d] * std::sin(w2 * tt + p2[d]) + noise * eps(rng);
    }
  }
  return f;
}

TimeSeriesFrame synthetic_aiops(std::size_t length, std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("synthetic series needs positive length");
  Rng rng(seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  const auto& names = aiops_columns();
  const std::size_t dims = names.size();
  TimeSeriesFrame f;
  f.timestamps = regular_stamps(length, std::chrono::minutes{5});
  f.columns = names;
  f.targets = {std::string(kAiopsTarget)};
  f.values = Tensor::matrix(length, dims);
  const double day = 2.0 * std::numbers::pi / 288.0;
  std::vector<double> drift(dims, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    const double load = 1.0 + 0.6 * std::sin(day * static_cast<double>(t) - 1.2) + 0.15 * eps(rng);
    double disk = 0.0;
    for (std::size_t d = 0; d + 1 < dims; ++d) {
      drift[d] = 0.995 * drift[d] + 0.02 * eps(rng);
      const double scale = 1.0 + 0.1 * static_cast<double>(d % 5);
      f.values(t, d) = 10.0 * scale * load + drift[d] + 0.3 * eps(rng);
      if (d < 8) disk += f.values(t, d);
    }
    f.values(t, dims - 1) = 0.02 * disk + 2.0 * load * load + 0.2 * eps(rng);
  }
  return f;
}

}  // namespace higenet
