#include "higenet/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace higenet {

namespace {

using nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One JSON object being read; remembers which keys were consumed.
class Section {
 public:
  Section(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError("config key '" + display() + "': expected an object");
  }

  bool has(const std::string& key) const { return object_.contains(key); }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(object_.at(key), qualified(key));
  }

  template <class Int>
    requires std::is_integral_v<Int> && (!std::is_same_v<Int, bool>)
  void read(const std::string& key, Int& out, bool positive = false) {
    if (!has(key)) return;
    seen_.insert(key);
    const json& v = object_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < (positive ? 1 : 0)) {
      throw ConfigError("config key '" + qualified(key) + "': expected " +
                        (positive ? "a positive integer" : "a non-negative integer"));
    }
    out = v.get<Int>();
  }
  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    seen_.insert(key);
    const json& v = object_.at(key);
    if (!v.is_number()) throw ConfigError("config key '" + qualified(key) + "': expected a number");
    out = v.get<double>();
  }
  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    seen_.insert(key);
    const json& v = object_.at(key);
    if (!v.is_boolean()) throw ConfigError("config key '" + qualified(key) + "': expected true or false");
    out = v.get<bool>();
  }
  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    seen_.insert(key);
    const json& v = object_.at(key);
    if (!v.is_string()) throw ConfigError("config key '" + qualified(key) + "': expected a string");
    out = v.get<std::string>();
  }
  template <class Enum, class Parse>
  void read_enum(const std::string& key, Enum& out, Parse parse) {
    if (!has(key)) return;
    std::string text;
    read(key, text);
    try {
      out = parse(text);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + qualified(key) + "': " + e.what());
    }
  }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
    }
  }

 private:
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

CausalFill parse_causal_fill(std::string_view name) {
  if (name == "cumsum") return CausalFill::cumsum;
  if (name == "running_mean") return CausalFill::running_mean;
  throw std::invalid_argument("unknown causal fill '" + std::string(name) + "'");
}

std::string_view causal_fill_name(CausalFill fill) { return fill == CausalFill::cumsum ? "cumsum" : "running_mean"; }

json metrics_json(const MetricReport& m) {
  return {{"corr", m.corr}, {"mse", m.mse}, {"mae", m.mae}, {"n", m.n}, {"flags", m.flags}};
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(root, "");
  if (top.has("data")) {
    Section d = top.child("data");
    d.read("path", cfg.data.path);
    d.read_enum("schema", cfg.data.schema, parse_csv_schema);
    d.read_enum("features", cfg.data.mode, parse_feature_mode);
    d.read_enum("preprocessing", cfg.data.scale, parse_scale_mode);
    d.read_enum("scope", cfg.data.scope, parse_fit_scope);
    if (d.has("synthetic")) {
      Section s = d.child("synthetic");
      s.read("kind", cfg.data.synthetic);
      if (cfg.data.synthetic != "seasonal" && cfg.data.synthetic != "aiops") {
        throw ConfigError("config key 'data.synthetic.kind': expected \"seasonal\" or \"aiops\"");
      }
      s.read("length", cfg.data.synthetic_length, true);
      s.read("dims", cfg.data.synthetic_dims, true);
      s.read("noise", cfg.data.synthetic_noise);
      s.read("seed", cfg.data.synthetic_seed);
      s.finish();
    }
    d.finish();
  }
  if (top.has("model")) {
    Section m = top.child("model");
    m.read("seq_len", cfg.model.seq_len, true);
    m.read("label_len", cfg.model.label_len);
    m.read("pred_len", cfg.model.pred_len, true);
    m.read("gap", cfg.model.gap);
    m.read("d_model", cfg.model.d_model, true);
    m.read("n_heads", cfg.model.n_heads, true);
    m.read("c", cfg.model.c);
    m.read("encoder_blocks", cfg.model.encoder_blocks, true);
    m.read("decoder_layers", cfg.model.decoder_layers, true);
    m.read("dropout", cfg.model.dropout);
    m.read("pre_norm", cfg.model.pre_norm);
    m.read_enum("causal_fill", cfg.model.causal_fill, parse_causal_fill);
    m.finish();
  }
  if (top.has("variant")) {
    Section v = top.child("variant");
    v.read("embedding", cfg.model.variant.embedding);
    v.read("distill", cfg.model.variant.distill);
    v.read("neural_sparse", cfg.model.variant.neural_sparse);
    v.finish();
  }
  if (top.has("train")) {
    Section t = top.child("train");
    t.read("lr", cfg.train.lr);
    t.read("weight_decay", cfg.train.weight_decay);
    t.read("decoupled_weight_decay", cfg.train.decoupled_weight_decay);
    t.read("batch_size", cfg.train.batch_size, true);
    t.read("epochs", cfg.train.epochs, true);
    t.read("decay_every", cfg.train.decay_every, true);
    t.read("decay_factor", cfg.train.decay_factor);
    t.read("beta1", cfg.train.beta1);
    t.read("beta2", cfg.train.beta2);
    t.read("eps", cfg.train.eps);
    t.read("seed", cfg.train.seed);
    t.read("max_steps", cfg.train.max_steps);
    t.read("max_eval_windows", cfg.train.max_eval_windows);
    t.finish();
  }
  top.read("eval_windows", cfg.eval_windows);
  top.read("original_units", cfg.original_units);
  top.finish();

  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config section 'train': ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& c) {
  json j{
      {"data",
       {{"path", c.data.path},
        {"schema", csv_schema_name(c.data.schema)},
        {"features", feature_mode_name(c.data.mode)},
        {"preprocessing", scale_mode_name(c.data.scale)},
        {"scope", fit_scope_name(c.data.scope)},
        {"synthetic",
         {{"kind", c.data.synthetic},
          {"length", c.data.synthetic_length},
          {"dims", c.data.synthetic_dims},
          {"noise", c.data.synthetic_noise},
          {"seed", c.data.synthetic_seed}}}}},
      {"model",
       {{"seq_len", c.model.seq_len},
        {"label_len", c.model.label_len},
        {"pred_len", c.model.pred_len},
        {"gap", c.model.gap},
        {"d_model", c.model.d_model},
        {"n_heads", c.model.n_heads},
        {"c", c.model.c},
        {"encoder_blocks", c.model.encoder_blocks},
        {"decoder_layers", c.model.decoder_layers},
        {"dropout", c.model.dropout},
        {"pre_norm", c.model.pre_norm},
        {"causal_fill", causal_fill_name(c.model.causal_fill)}}},
      {"variant",
       {{"embedding", c.model.variant.embedding},
        {"distill", c.model.variant.distill},
        {"neural_sparse", c.model.variant.neural_sparse}}},
      {"train",
       {{"lr", c.train.lr},
        {"weight_decay", c.train.weight_decay},
        {"decoupled_weight_decay", c.train.decoupled_weight_decay},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"decay_every", c.train.decay_every},
        {"decay_factor", c.train.decay_factor},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"eps", c.train.eps},
        {"seed", c.train.seed},
        {"max_steps", c.train.max_steps},
        {"max_eval_windows", c.train.max_eval_windows}}},
      {"eval_windows", c.eval_windows},
      {"original_units", c.original_units}};
  return j.dump(2);
}

TimeSeriesFrame load_series(const DataConfig& config) {
  if (!config.path.empty()) return load_csv(config.path, config.schema);
  if (config.synthetic == "aiops") return synthetic_aiops(config.synthetic_length, config.synthetic_seed);
  return synthetic_seasonal(config.synthetic_length, config.synthetic_dims, config.synthetic_noise,
                            config.synthetic_seed);
}

PreparedData prepare_data(const TimeSeriesFrame& frame, const DataConfig& data, ModelConfig& model) {
  const std::size_t span = model.seq_len + model.gap + model.pred_len;
  const SplitFrames splits = split_622(frame, span);
  ScaledSplits scaled = fit_apply_scaler(splits, data.scale, data.scope);
  const WindowSpec spec = model.window_spec(data.mode);
  WindowSet train = make_windows(scaled.frames.train, spec);
  WindowSet val = make_windows(scaled.frames.val, spec);
  WindowSet test = make_windows(scaled.frames.test, spec);
  model.d_x = train.d_x();
  model.d_y = train.d_y();
  return PreparedData{std::move(scaled), std::move(train), std::move(val), std::move(test)};
}

TrainedModel build_model(const ModelConfig& config, std::uint64_t seed) {
  TrainedModel t;
  t.params = std::make_unique<ParamStore>();
  Rng rng(seed);
  t.model = HigeNet::create(*t.params, config, rng);
  return t;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants{
      {"none", {false, false, false}}, {"M0", {true, false, false}}, {"M1", {false, true, false}},
      {"M2", {false, false, true}},    {"M3", {true, true, false}},  {"M4", {true, false, true}},
      {"M5", {false, true, true}},     {"full", {true, true, true}},
  };
  return variants;
}

std::vector<AblationRow> run_ablation(const TimeSeriesFrame& frame, const RunConfig& config,
                                      const std::vector<std::size_t>& horizons,
                                      const std::vector<AblationVariant>& variants, const AblationProgress& progress) {
  if (horizons.empty()) throw std::invalid_argument("ablation needs at least one horizon");
  std::vector<AblationRow> rows;
  for (std::size_t horizon : horizons) {
    ModelConfig base = config.model;
    base.pred_len = horizon;
    const PreparedData data = prepare_data(frame, config.data, base);
    for (const AblationVariant& variant : variants) {
      AblationRow row;
      row.variant = variant.name;
      row.toggles = variant.toggles;
      row.horizon = horizon;
      ModelConfig mc = base;
      mc.variant = variant.toggles;
      row.embedding = mc.variant.embedding ? "beta_gated" : "informer";
      row.distill = std::string(distill_kind_name(mc.distill_kind()));
      row.encoder_kernel = std::string(attention_kind_name(mc.encoder_attention()));
      row.decoder_kernel = std::string(attention_kind_name(mc.decoder_self_attention()));
      try {
        TrainedModel tm = build_model(mc, config.train.seed);
        const auto start = std::chrono::steady_clock::now();
        const TrainHistory history = train_loop(tm.model, *tm.params, data.train, &data.val, config.train);
        row.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row.train_steps = history.total_steps;
        row.test = evaluate(tm.model, *tm.params, data.test, config.eval_windows);
        tm.model.predict(*tm.params, data.test[0], &row.counters);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      if (progress) progress(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j{{"variant", r.variant},
           {"horizon", r.horizon},
           {"toggles", {{"E", r.toggles.embedding}, {"D", r.toggles.distill}, {"N", r.toggles.neural_sparse}}},
           {"failed", r.failed},
           {"train_seconds", r.train_seconds},
           {"train_steps", r.train_steps},
           {"provenance",
            {{"embedding", r.embedding},
             {"distill", r.distill},
             {"encoder_kernel", r.encoder_kernel},
             {"decoder_kernel", r.decoder_kernel},
             {"encoder_dot_products", r.counters.encoder.dot_products},
             {"decoder_dot_products", r.counters.decoder.dot_products},
             {"decoder_passes", r.counters.decoder_passes}}}};
    if (r.failed) {
      j["error"] = r.error;
    } else {
      j["test"] = metrics_json(r.test.metrics);
      j["test"]["windows"] = r.test.windows;
    }
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %7s %10s %8s %8s %8s  %s\n", "variant", "horizon", "train_s", "CORR", "MSE",
                "MAE", "encoder kernel");
  out << line;
  for (const auto& r : rows) {
    if (r.failed) {
      std::snprintf(line, sizeof(line), "%-8s %7zu  failed: %s\n", r.variant.c_str(), r.horizon, r.error.c_str());
    } else {
      std::snprintf(line, sizeof(line), "%-8s %7zu %10.2f %8.4f %8.4f %8.4f  %s\n", r.variant.c_str(), r.horizon,
                    r.train_seconds, r.test.metrics.corr, r.test.metrics.mse, r.test.metrics.mae,
                    r.encoder_kernel.c_str());
    }
    out << line;
  }
}

}  // namespace higenet
