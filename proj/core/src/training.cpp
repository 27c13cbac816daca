#include "higenet/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

namespace higenet {

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("lr must be non-negative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (decay_every == 0) throw std::invalid_argument("decay_every must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

double lr_schedule(const TrainConfig& config, std::size_t epoch) {
  return config.lr * std::pow(config.decay_factor, static_cast<double>(epoch / config.decay_every));
}

OptimizerState OptimizerState::for_params(const ParamStore& params) {
  OptimizerState s;
  for (const auto& e : params) {
    s.m.emplace_back(e.value.shape(), 0.0);
    s.v.emplace_back(e.value.shape(), 0.0);
  }
  return s;
}

void adam_step(ParamStore& params, OptimizerState& state, double lr, const TrainConfig& config) {
  if (state.m.size() != params.size()) throw std::invalid_argument("optimizer state does not match the parameter store");
  for (const auto& e : params) {
    if (!e.value.has_grad()) throw std::invalid_argument("parameter '" + e.name + "' has no gradient");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  std::size_t index = 0;
  for (auto& e : params) {
    Tensor& theta = e.value;
    auto g = theta.grad();
    Tensor& m = state.m[index];
    Tensor& v = state.v[index];
    ++index;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double grad = g[i];
      if (config.decoupled_weight_decay) {
        theta[i] -= lr * config.weight_decay * theta[i];
      } else {
        grad += config.weight_decay * theta[i];
      }
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad * grad;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

Tensor repeat_last_forecast(const WindowSample& sample, std::size_t pred_len) {
  const Tensor& known = sample.enc_targets;
  Tensor out = Tensor::matrix(pred_len, known.cols());
  const std::size_t last = known.rows() - 1;
  for (std::size_t r = 0; r < pred_len; ++r) {
    for (std::size_t c = 0; c < known.cols(); ++c) out(r, c) = known(last, c);
  }
  return out;
}

EvalReport evaluate(const WindowSet& windows, const Predictor& predict, std::size_t max_windows) {
  if (windows.size() == 0) throw std::invalid_argument("cannot evaluate an empty split");
  const std::size_t count = max_windows == 0 ? windows.size() : std::min(max_windows, windows.size());
  EvalReport report;
  report.windows = count;
  for (std::size_t k = 0; k < count; ++k) {
    // Evenly spaced when subsampling; identity otherwise.
    const std::size_t index = count == windows.size() ? k : k * (windows.size() - 1) / std::max<std::size_t>(count - 1, 1);
    const WindowSample sample = windows[index];
    const MetricReport m = metrics(sample.target, predict(sample));
    report.metrics.corr += m.corr;
    report.metrics.mse += m.mse;
    report.metrics.mae += m.mae;
    report.metrics.n += m.n;
    if (!m.corr_defined) ++report.corr_undefined_windows;
  }
  const double n = static_cast<double>(count);
  report.metrics.corr /= n;
  report.metrics.mse /= n;
  report.metrics.mae /= n;
  if (report.corr_undefined_windows > 0) {
    report.metrics.corr_defined = false;
    report.metrics.flags.emplace_back("corr_undefined");
  }
  return report;
}

EvalReport evaluate(const HigeNet& model, ParamStore& params, const WindowSet& windows, std::size_t max_windows) {
  return evaluate(windows, [&](const WindowSample& s) { return model.predict(params, s); }, max_windows);
}

namespace {

nlohmann::json metrics_json(const MetricReport& m) {
  return {{"corr", m.corr}, {"mse", m.mse}, {"mae", m.mae}, {"n", m.n}, {"flags", m.flags}};
}

std::vector<Tensor> snapshot(const ParamStore& params) {
  std::vector<Tensor> out;
  for (const auto& e : params) out.emplace_back(e.value.shape(), e.value.values());
  return out;
}

void restore(ParamStore& params, const std::vector<Tensor>& values) {
  std::size_t i = 0;
  for (auto& e : params) {
    auto dst = e.value.values();
    auto src = values[i++].values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace

std::string history_to_json(const TrainHistory& history) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    nlohmann::json j{{"epoch", e.epoch}, {"lr", e.lr}, {"steps", e.steps}, {"train_loss", e.train_loss},
                     {"seconds", e.seconds}};
    if (e.has_validation) j["validation"] = metrics_json(e.validation.metrics);
    epochs.push_back(std::move(j));
  }
  nlohmann::json j{{"epochs", epochs},
                   {"step_losses", history.step_losses},
                   {"total_steps", history.total_steps},
                   {"best_epoch", history.best_epoch},
                   {"best_val_mse", history.best_val_mse},
                   {"seconds", history.seconds}};
  return j.dump(2);
}

TrainHistory train_loop(const HigeNet& model, ParamStore& params, const WindowSet& train, const WindowSet* validation,
                        const TrainConfig& config) {
  config.validate();
  if (train.size() == 0) throw std::invalid_argument("training split has no windows");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  TrainHistory history;
  OptimizerState state = OptimizerState::for_params(params);
  Rng shuffle_rng(config.seed);
  ForwardContext ctx;
  ctx.training = true;
  ctx.dropout = model.config.dropout;
  ctx.rng.seed(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(train.size());
  std::vector<Tensor> best;
  bool have_best = false;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps != 0 && history.total_steps >= config.max_steps) break;
    const auto epoch_start = clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr_schedule(config, epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      if (config.max_steps != 0 && history.total_steps >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const WindowSample sample = train[order[k]];
        Tape tape;
        Binder bind{tape, params};
        Var pred = model.forward(bind, sample, ctx);
        Var loss = mse_loss(pred, tape.constant(sample.target));
        const double value = loss.value().item();
        if (!std::isfinite(value)) {
          throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(batch_index) + ", lr " + std::to_string(record.lr));
        }
        batch_loss += value * weight;
        tape.backward(scale(loss, weight));
      }
      adam_step(params, state, record.lr, config);
      history.step_losses.push_back(batch_loss);
      loss_sum += batch_loss;
      ++record.steps;
      ++history.total_steps;
    }
    if (record.steps == 0) break;
    record.train_loss = loss_sum / static_cast<double>(record.steps);

    if (validation != nullptr && validation->size() > 0) {
      record.has_validation = true;
      record.validation = evaluate(model, params, *validation, config.max_eval_windows);
      if (!have_best || record.validation.metrics.mse < history.best_val_mse) {
        have_best = true;
        history.best_epoch = epoch;
        history.best_val_mse = record.validation.metrics.mse;
        best = snapshot(params);
      }
    }
    record.seconds = std::chrono::duration<double>(clock::now() - epoch_start).count();
    history.epochs.push_back(std::move(record));
  }
  if (have_best) restore(params, best);
  for (auto& e : params) e.value.drop_grad();
  history.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return history;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw std::runtime_error("checkpoint truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct ParsedParam {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct ParsedCheckpoint {
  std::vector<ParsedParam> params;
  std::uint64_t checksum = 0;
};

ParsedCheckpoint parse_checkpoint(std::string_view bytes, bool with_values) {
  const std::string_view magic(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  if (bytes.substr(0, magic.size()) != magic) throw std::runtime_error("not a checkpoint (bad magic)");
  if (bytes.size() < magic.size() + 8) throw std::runtime_error("checkpoint truncated");
  const std::string_view payload = bytes.substr(magic.size(), bytes.size() - magic.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8));
  ParsedCheckpoint out;
  out.checksum = tail.u64();
  if (fnv1a64(payload) != out.checksum) throw std::runtime_error("checkpoint checksum mismatch");

  Reader r(payload);
  while (r.remaining() > 0) {
    ParsedParam p;
    p.name = std::string(r.take(r.u64()));
    const std::uint64_t rank = r.u64();
    if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint entry '" + p.name + "' has invalid rank");
    for (std::uint64_t i = 0; i < rank; ++i) p.shape.push_back(r.u64());
    const std::size_t count = shape_size(p.shape);
    if (with_values) {
      p.values.resize(count);
      for (auto& v : p.values) v = std::bit_cast<double>(r.u64());
    } else {
      r.take(count * 8);
    }
    out.params.push_back(std::move(p));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::string checkpoint_bytes(const ParamStore& params) {
  std::string payload;
  for (const auto& e : params) {
    put_u64(payload, e.name.size());
    payload += e.name;
    put_u64(payload, e.value.rank());
    for (std::size_t extent : e.value.shape()) put_u64(payload, extent);
    for (double v : e.value.values()) put_u64(payload, std::bit_cast<std::uint64_t>(v));
  }
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  out += payload;
  put_u64(out, fnv1a64(payload));
  return out;
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const std::string bytes = checkpoint_bytes(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void load_checkpoint_bytes(ParamStore& params, std::string_view bytes) {
  const ParsedCheckpoint parsed = parse_checkpoint(bytes, true);
  if (parsed.params.size() != params.size()) {
    throw std::runtime_error("checkpoint has " + std::to_string(parsed.params.size()) + " parameters, model has " +
                             std::to_string(params.size()));
  }
  std::size_t i = 0;
  for (auto& e : params) {
    const ParsedParam& p = parsed.params[i++];
    if (p.name != e.name) throw std::runtime_error("checkpoint parameter '" + p.name + "' where '" + e.name + "' expected");
    if (p.shape != e.value.shape()) {
      throw std::runtime_error("checkpoint parameter '" + p.name + "' has shape " + shape_to_string(p.shape) +
                               ", model expects " + shape_to_string(e.value.shape()));
    }
    std::copy(p.values.begin(), p.values.end(), e.value.values().begin());
  }
}

void load_checkpoint(ParamStore& params, const std::string& path) { load_checkpoint_bytes(params, read_file(path)); }

CheckpointSummary inspect_checkpoint_bytes(std::string_view bytes) {
  const ParsedCheckpoint parsed = parse_checkpoint(bytes, false);
  CheckpointSummary s;
  s.checksum = parsed.checksum;
  for (const auto& p : parsed.params) {
    s.entries.push_back({p.name, p.shape});
    s.scalars += shape_size(p.shape);
  }
  return s;
}

CheckpointSummary inspect_checkpoint(const std::string& path) { return inspect_checkpoint_bytes(read_file(path)); }

}  // namespace higenet
