// higenet: train, evaluate and benchmark the forecasting model from the shell.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "higenet/bench.hpp"
#include "higenet/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v == 0) {
      throw std::invalid_argument(std::string(flag) + ": '" + item + "' is not a positive integer");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::invalid_argument(std::string(flag) + ": empty list");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text << '\n';
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

struct Session {
  higenet::RunConfig config;
  higenet::TimeSeriesFrame frame;
  std::unique_ptr<higenet::PreparedData> data;
  higenet::TrainedModel trained;
};

Session open_session(const std::string& config_path, const std::string& data_override) {
  Session s;
  s.config = higenet::load_run_config(config_path);
  if (!data_override.empty()) s.config.data.path = data_override;
  s.frame = higenet::load_series(s.config.data);
  s.data = std::make_unique<higenet::PreparedData>(higenet::prepare_data(s.frame, s.config.data, s.config.model));
  s.trained = higenet::build_model(s.config.model, s.config.train.seed);
  return s;
}

json metrics_json(const higenet::EvalReport& r) {
  json j = json::parse(higenet::metrics_to_json(r.metrics));
  j["windows"] = r.windows;
  return j;
}

higenet::EvalReport evaluate_session(Session& s) {
  const auto& test = s.data->test;
  if (!s.config.original_units) {
    return higenet::evaluate(s.trained.model, *s.trained.params, test, s.config.eval_windows);
  }
  // Score in original units: invert predictions and targets alike.
  const auto cols = test.target_columns();
  const auto& scaler = s.data->scaled.scaler;
  std::vector<std::size_t> target_cols(cols.begin(), cols.end());
  std::size_t count = s.config.eval_windows == 0 ? test.size() : std::min(s.config.eval_windows, test.size());
  higenet::EvalReport report;
  report.windows = count;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t index = count == test.size() ? k : k * (test.size() - 1) / std::max<std::size_t>(count - 1, 1);
    const auto sample = test[index];
    const auto pred = scaler.inverse_columns(s.trained.model.predict(*s.trained.params, sample), target_cols);
    const auto truth = scaler.inverse_columns(sample.target, target_cols);
    const auto m = higenet::metrics(truth, pred);
    report.metrics.corr += m.corr / static_cast<double>(count);
    report.metrics.mse += m.mse / static_cast<double>(count);
    report.metrics.mae += m.mae / static_cast<double>(count);
    report.metrics.n += m.n;
    if (!m.corr_defined) ++report.corr_undefined_windows;
  }
  if (report.corr_undefined_windows > 0) {
    report.metrics.corr_defined = false;
    report.metrics.flags.emplace_back("corr_undefined");
  }
  return report;
}

// Forecast rows for `rows` consecutive test steps, tiling windows by pred_len.
void write_forecast(Session& s, const fs::path& path, std::size_t start, std::size_t rows) {
  const auto& test = s.data->test;
  const std::size_t horizon = s.config.model.pred_len;
  if (start >= test.size()) {
    throw std::invalid_argument("forecast start " + std::to_string(start) + " beyond " + std::to_string(test.size()) +
                                " test windows");
  }
  const auto cols = test.target_columns();
  std::vector<std::size_t> target_cols(cols.begin(), cols.end());
  const auto& scaler = s.data->scaled.scaler;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "timestamp";
  for (std::size_t c : target_cols) out << ',' << test.frame().columns[c] << "_truth," << test.frame().columns[c] << "_prediction";
  out << '\n';
  out.precision(10);
  std::size_t written = 0;
  for (std::size_t w = start; written < rows && w < test.size(); w += horizon) {
    const auto sample = test[w];
    auto pred = s.trained.model.predict(*s.trained.params, sample);
    auto truth = sample.target;
    if (s.config.original_units) {
      pred = scaler.inverse_columns(pred, target_cols);
      truth = scaler.inverse_columns(truth, target_cols);
    }
    for (std::size_t r = 0; r < horizon && written < rows; ++r, ++written) {
      out << higenet::format_timestamp(sample.target_times[r]);
      for (std::size_t c = 0; c < target_cols.size(); ++c) out << ',' << truth(r, c) << ',' << pred(r, c);
      out << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HigeNet long-sequence forecasting toolkit"};
  app.require_subcommand(1);
  std::string command;

  std::string config_path;
  std::string data_path;
  std::string out_dir = "higenet_out";
  std::string checkpoint;

  auto* train = app.add_subcommand("train", "train a model and write checkpoint, history and metrics");
  train->add_option("-c,--config", config_path, "JSON run configuration")->required();
  train->add_option("--data", data_path, "override data.path");
  train->add_option("-o,--out", out_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval->add_option("-c,--config", config_path, "JSON run configuration")->required();
  eval->add_option("--data", data_path, "override data.path");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("-o,--out", out_dir, "output directory");

  std::size_t forecast_rows = 288;
  std::size_t forecast_start = 0;
  auto* predict = app.add_subcommand("predict", "write a forecast-vs-truth CSV over consecutive test rows");
  predict->add_option("-c,--config", config_path, "JSON run configuration")->required();
  predict->add_option("--data", data_path, "override data.path");
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict->add_option("--rows", forecast_rows, "consecutive steps to forecast");
  predict->add_option("--start", forecast_start, "first test window");
  predict->add_option("-o,--out", out_dir, "output directory");

  std::string batches = "1,4,16,32,64";
  std::string seq_lens = "64,128,256,512,768,1024";
  std::string kernels = "canonical,prob_sparse,neural_sparse";
  std::string bench_out;
  higenet::BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "attention kernel microbenchmark (CSV)");
  bench->add_option("--batches", batches, "comma-separated batch sizes");
  bench->add_option("--seq-lens", seq_lens, "comma-separated sequence lengths");
  bench->add_option("--kernels", kernels, "comma-separated kernels");
  bench->add_option("--repeats", bench_opts.repeats, "timed repeats per configuration");
  bench->add_option("--warmup", bench_opts.warmup, "untimed warm-up runs");
  bench->add_option("--heads", bench_opts.heads, "attention heads");
  bench->add_option("--dims", bench_opts.dims, "per-head width");
  bench->add_option("--c", bench_opts.c, "sparsity factor");
  bench->add_option("--seed", bench_opts.seed, "input seed");
  bench->add_option("-o,--out", bench_out, "CSV path (default stdout)");

  std::string horizons = "96,288,576";
  auto* ablate = app.add_subcommand("ablate", "train all eight ablation variants per horizon");
  ablate->add_option("-c,--config", config_path, "JSON run configuration")->required();
  ablate->add_option("--data", data_path, "override data.path");
  ablate->add_option("--horizons", horizons, "comma-separated prediction lengths");
  ablate->add_option("-o,--out", out_dir, "output directory");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect-checkpoint", "list parameters stored in a checkpoint");
  inspect->add_option("path", inspect_path, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    if (*train) {
      command = "train";
      Session s = open_session(config_path, data_path);
      const fs::path out = prepare_out_dir(out_dir);
      const auto history =
          higenet::train_loop(s.trained.model, *s.trained.params, s.data->train, &s.data->val, s.config.train);
      higenet::save_checkpoint(*s.trained.params, (out / "checkpoint.hgnt").string());
      write_text(out / "history.json", higenet::history_to_json(history));
      write_text(out / "config.json", higenet::run_config_to_json(s.config));
      const auto report = evaluate_session(s);
      write_text(out / "metrics.json", metrics_json(report).dump(2));
      write_forecast(s, out / "forecast.csv", 0, std::min<std::size_t>(forecast_rows, s.data->test.size()));
      std::cout << json{{"checkpoint", (out / "checkpoint.hgnt").string()},
                        {"steps", history.total_steps},
                        {"test", metrics_json(report)}}
                       .dump()
                << '\n';
    } else if (*eval) {
      command = "eval";
      Session s = open_session(config_path, data_path);
      higenet::load_checkpoint(*s.trained.params, checkpoint);
      const fs::path out = prepare_out_dir(out_dir);
      const auto report = evaluate_session(s);
      write_text(out / "metrics.json", metrics_json(report).dump(2));
      std::cout << metrics_json(report).dump() << '\n';
    } else if (*predict) {
      command = "predict";
      Session s = open_session(config_path, data_path);
      higenet::load_checkpoint(*s.trained.params, checkpoint);
      const fs::path out = prepare_out_dir(out_dir);
      write_forecast(s, out / "forecast.csv", forecast_start, forecast_rows);
      std::cout << json{{"forecast", (out / "forecast.csv").string()}, {"rows", forecast_rows}}.dump() << '\n';
    } else if (*bench) {
      command = "bench";
      bench_opts.batches = parse_list(batches, "--batches");
      bench_opts.seq_lens = parse_list(seq_lens, "--seq-lens");
      bench_opts.kernels.clear();
      std::stringstream ks(kernels);
      std::string k;
      while (std::getline(ks, k, ',')) bench_opts.kernels.push_back(higenet::parse_bench_kernel(k));
      const auto records = higenet::bench_attention(bench_opts, [](const higenet::BenchRecord& r) {
        std::cerr << r.kernel << " batch=" << r.batch << " L=" << r.seq_len << " median_ms=" << r.median_ns / 1e6
                  << '\n';
      });
      if (bench_out.empty()) {
        higenet::write_bench_csv(std::cout, records);
      } else {
        std::ofstream out(bench_out);
        if (!out) throw std::runtime_error("cannot write '" + bench_out + "'");
        higenet::write_bench_csv(out, records);
      }
    } else if (*ablate) {
      command = "ablate";
      auto config = higenet::load_run_config(config_path);
      if (!data_path.empty()) config.data.path = data_path;
      const auto frame = higenet::load_series(config.data);
      const fs::path out = prepare_out_dir(out_dir);
      const auto rows = higenet::run_ablation(frame, config, parse_list(horizons, "--horizons"),
                                              higenet::ablation_variants(), [](const higenet::AblationRow& r) {
                                                std::cerr << r.variant << " horizon=" << r.horizon
                                                          << (r.failed ? " failed" : " ok") << '\n';
                                              });
      write_text(out / "ablation.json", higenet::ablation_to_json(rows));
      std::ofstream table(out / "ablation.txt");
      higenet::write_ablation_table(table, rows);
      higenet::write_ablation_table(std::cout, rows);
    } else if (*inspect) {
      command = "inspect-checkpoint";
      const auto summary = higenet::inspect_checkpoint(inspect_path);
      json params = json::array();
      for (const auto& e : summary.entries) params.push_back({{"name", e.name}, {"shape", e.shape}});
      char checksum[24];
      std::snprintf(checksum, sizeof(checksum), "%016llx", static_cast<unsigned long long>(summary.checksum));
      std::cout << json{{"parameters", params}, {"scalars", summary.scalars}, {"checksum", checksum}}.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"command", command}}.dump() << '\n';
    return 1;
  }
  return 0;
}
