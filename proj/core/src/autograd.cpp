#include "higenet/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace higenet {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("use of an unbound Var");
  return tape_->value(id_);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(ParamStore& store, ParamId id) {
  Tensor* p = &store[id];
  if (auto it = bound_params_.find(p); it != bound_params_.end()) return {this, it->second};
  Node n;
  n.external = p;
  n.param = p;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  bound_params_.emplace(p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.owned = std::move(value);
  if (record_) {
    n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](const Var& v) { return requires_grad(v); });
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(const Var& target, const Tensor& grad) {
  Node& n = nodes_[target.id()];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = grad;
    return;
  }
  double* g = n.grad.data();
  for (std::size_t i = 0; i < grad.size(); ++i) g[i] += grad[i];
}

void Tape::backward(const Var& loss) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (loss.value().size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  if (!requires_grad(loss)) return;
  nodes_[loss.id()].grad = Tensor(loss.shape(), 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) {
      n.param->ensure_grad();
      auto pg = n.param->grad();
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
}

namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) {
      Tensor neg = g;
      for (double& x : neg.values()) x = -x;
      t.accumulate(b, neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
      t.accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Tensor gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
      t.accumulate(b, gb);
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  return x.tape().record(std::move(out), {x}, [x, factor](Tape& t, const Tensor& g) {
    Tensor gx = g;
    for (double& v : gx.values()) v *= factor;
    t.accumulate(x, gx);
  });
}

Var scale_by(const Var& x, const Var& s) {
  if (s.value().size() != 1) throw std::invalid_argument("scale_by: factor must have one element");
  const double factor = s.value()[0];
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  return x.tape().record(std::move(out), {x, s}, [x, s](Tape& t, const Tensor& g) {
    const double f = s.value()[0];
    if (t.requires_grad(x)) {
      Tensor gx = g;
      for (double& v : gx.values()) v *= f;
      t.accumulate(x, gx);
    }
    if (t.requires_grad(s)) {
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * x.value()[i];
      t.accumulate(s, Tensor(s.shape(), dot));
    }
  });
}

Var add_bias(const Var& x, const Var& bias) {
  require_matrix(x.value(), "add_bias input");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (bias.value().size() != cols) {
    throw std::invalid_argument("add_bias: bias " + shape_to_string(bias.shape()) + " vs input " +
                                shape_to_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) += bias.value()[c];
  }
  return x.tape().record(std::move(out), {x, bias}, [x, bias, rows, cols](Tape& t, const Tensor& g) {
    t.accumulate(x, g);
    if (t.requires_grad(bias)) {
      Tensor gb(bias.shape());
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g(r, c);
      }
      t.accumulate(bias, gb);
    }
  });
}

Var mul_col(const Var& x, const Var& column) {
  require_matrix(x.value(), "mul_col input");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (column.value().size() != rows) {
    throw std::invalid_argument("mul_col: column " + shape_to_string(column.shape()) + " vs input " +
                                shape_to_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) *= column.value()[r];
  }
  return x.tape().record(std::move(out), {x, column}, [x, column, rows, cols](Tape& t, const Tensor& g) {
    if (t.requires_grad(x)) {
      Tensor gx = g;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gx(r, c) *= column.value()[r];
      }
      t.accumulate(x, gx);
    }
    if (t.requires_grad(column)) {
      Tensor gc(column.shape());
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g(r, c) * x.value()(r, c);
        gc[r] = dot;
      }
      t.accumulate(column, gc);
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  return a.tape().record(ops::matmul(a.value(), b.value()), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.accumulate(a, ops::matmul_nt(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b, ops::matmul_tn(a.value(), g));
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  return a.tape().record(ops::matmul_nt(a.value(), b.value()), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.accumulate(a, ops::matmul(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b, ops::matmul_tn(g, a.value()));
  });
}

Var conv1d_time(const Var& x, const Var& kernel, std::size_t padding, const std::optional<Var>& bias) {
  Tensor out = ops::conv1d_time(x.value(), kernel.value(), padding, bias ? &bias->value() : nullptr);
  Tape& tape = x.tape();
  auto backward = [x, kernel, padding, bias](Tape& t, const Tensor& g) {
    auto grads = ops::conv1d_time_backward(x.value(), kernel.value(), padding, g, bias.has_value());
    t.accumulate(x, grads.x);
    t.accumulate(kernel, grads.kernel);
    if (bias) t.accumulate(*bias, grads.bias.reshaped(bias->shape()));
  };
  if (bias) return tape.record(std::move(out), {x, kernel, *bias}, std::move(backward));
  return tape.record(std::move(out), {x, kernel}, std::move(backward));
}

Var pool1d(const Var& x, const ops::PoolSpec& spec) {
  return x.tape().record(ops::pool1d(x.value(), spec), {x}, [x, spec](Tape& t, const Tensor& g) {
    t.accumulate(x, ops::pool1d_backward(x.value(), spec, g));
  });
}

Var softmax_lastdim(const Var& x, const ops::Mask* mask) {
  Tape& tape = x.tape();
  Tensor y = ops::softmax_lastdim(x.value(), mask);
  // The output node is the next one recorded; its value is the saved y.
  const Var self(&tape, tape.size());
  return tape.record(std::move(y), {x}, [x, self](Tape& t, const Tensor& g) {
    t.accumulate(x, ops::softmax_backward(self.value(), g));
  });
}

Var elu(const Var& x) {
  return x.tape().record(ops::elu(x.value()), {x}, [x](Tape& t, const Tensor& g) {
    Tensor gx = g;
    const Tensor& v = x.value();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= v[i] > 0.0 ? 1.0 : std::exp(v[i]);
    t.accumulate(x, gx);
  });
}

Var relu(const Var& x) {
  return x.tape().record(ops::relu(x.value()), {x}, [x](Tape& t, const Tensor& g) {
    Tensor gx = g;
    const Tensor& v = x.value();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = v[i] > 0.0 ? gx[i] : 0.0;
    t.accumulate(x, gx);
  });
}

Var embedding(const Var& table, std::span<const int> indices) {
  require_matrix(table.value(), "embedding table");
  const std::size_t vocab = table.rows();
  const std::size_t width = table.cols();
  if (indices.empty()) throw std::invalid_argument("embedding: no indices");
  Tensor out = Tensor::matrix(indices.size(), width);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int idx = indices[r];
    if (idx < 0 || static_cast<std::size_t>(idx) >= vocab) {
      throw std::out_of_range("embedding index " + std::to_string(idx) + " outside vocabulary of " +
                              std::to_string(vocab));
    }
    std::copy_n(table.value().data() + static_cast<std::size_t>(idx) * width, width, out.data() + r * width);
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return table.tape().record(std::move(out), {table}, [table, idx = std::move(idx), width](Tape& t, const Tensor& g) {
    Tensor gt(table.shape());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = gt.data() + static_cast<std::size_t>(idx[r]) * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += g(r, c);
    }
    t.accumulate(table, gt);
  });
}

Var mean_rows(const Var& x) {
  return x.tape().record(ops::mean_rows(x.value()), {x}, [x](Tape& t, const Tensor& g) {
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    Tensor gx(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) gx(r, c) = g[c] / static_cast<double>(rows);
    }
    t.accumulate(x, gx);
  });
}

Var broadcast_rows(const Var& x, std::size_t rows) {
  require_matrix(x.value(), "broadcast_rows input");
  if (x.rows() != 1) throw std::invalid_argument("broadcast_rows expects a single row");
  const std::size_t cols = x.cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.value().data(), cols, out.data() + r * cols);
  return x.tape().record(std::move(out), {x}, [x, rows, cols](Tape& t, const Tensor& g) {
    Tensor gx(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) gx[c] += g(r, c);
    }
    t.accumulate(x, gx);
  });
}

Var cumsum_rows(const Var& x) {
  return x.tape().record(ops::cumsum_rows(x.value()), {x}, [x](Tape& t, const Tensor& g) {
    // Reverse cumulative sum.
    Tensor gx = g;
    for (std::size_t r = gx.rows() - 1; r-- > 0;) {
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += gx(r + 1, c);
    }
    t.accumulate(x, gx);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + offset * cols);
    offset += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs, cols](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t n = p.rows();
      if (t.requires_grad(p)) {
        Tensor gp(p.shape());
        std::copy_n(g.data() + off * cols, n * cols, gp.data());
        t.accumulate(p, gp);
      }
      off += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(p.value().data() + r * w, w, out.data() + r * cols + offset);
    offset += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs, rows, cols](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t w = p.cols();
      if (t.requires_grad(p)) {
        Tensor gp(p.shape());
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(g.data() + r * cols + off, w, gp.data() + r * w);
        t.accumulate(p, gp);
      }
      off += w;
    }
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t count) {
  require_matrix(x.value(), "slice_rows input");
  if (count == 0 || begin + count > x.rows()) {
    throw std::out_of_range("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " +
                            shape_to_string(x.shape()));
  }
  const std::size_t cols = x.cols();
  Tensor out = Tensor::matrix(count, cols);
  std::copy_n(x.value().data() + begin * cols, count * cols, out.data());
  return x.tape().record(std::move(out), {x}, [x, begin, count, cols](Tape& t, const Tensor& g) {
    Tensor gx(x.shape());
    std::copy_n(g.data(), count * cols, gx.data() + begin * cols);
    t.accumulate(x, gx);
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  require_matrix(x.value(), "slice_cols input");
  if (count == 0 || begin + count > x.cols()) {
    throw std::out_of_range("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " +
                            shape_to_string(x.shape()));
  }
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  Tensor out = Tensor::matrix(rows, count);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.value().data() + r * cols + begin, count, out.data() + r * count);
  return x.tape().record(std::move(out), {x}, [x, begin, count, rows, cols](Tape& t, const Tensor& g) {
    Tensor gx(x.shape());
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(g.data() + r * count, count, gx.data() + r * cols + begin);
    t.accumulate(x, gx);
  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  require_matrix(x.value(), "gather_rows input");
  const std::size_t cols = x.cols();
  Tensor out = Tensor::matrix(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) throw std::out_of_range("gather_rows index " + std::to_string(rows[i]));
    std::copy_n(x.value().data() + rows[i] * cols, cols, out.data() + i * cols);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return x.tape().record(std::move(out), {x}, [x, idx = std::move(idx), cols](Tape& t, const Tensor& g) {
    Tensor gx(x.shape());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t c = 0; c < cols; ++c) gx(idx[i], c) += g(i, c);
    }
    t.accumulate(x, gx);
  });
}

Var scatter_rows(const Var& base, const Var& src, std::span<const std::size_t> rows) {
  require_matrix(base.value(), "scatter_rows base");
  const std::size_t cols = base.cols();
  if (src.cols() != cols || src.rows() != rows.size()) {
    throw std::invalid_argument("scatter_rows: source " + shape_to_string(src.shape()) + " for " +
                                std::to_string(rows.size()) + " rows of " + shape_to_string(base.shape()));
  }
  std::vector<std::uint8_t> seen(base.rows(), 0);
  Tensor out = base.value();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= base.rows()) throw std::out_of_range("scatter_rows index " + std::to_string(rows[i]));
    if (seen[rows[i]]++) throw std::invalid_argument("scatter_rows: duplicate index " + std::to_string(rows[i]));
    std::copy_n(src.value().data() + i * cols, cols, out.data() + rows[i] * cols);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return base.tape().record(std::move(out), {base, src}, [base, src, idx = std::move(idx), cols](Tape& t, const Tensor& g) {
    if (t.requires_grad(base)) {
      Tensor gb = g;
      for (std::size_t r : idx) std::fill_n(gb.data() + r * cols, cols, 0.0);
      t.accumulate(base, gb);
    }
    if (t.requires_grad(src)) {
      Tensor gs(src.shape());
      for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(g.data() + idx[i] * cols, cols, gs.data() + i * cols);
      t.accumulate(src, gs);
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  require_matrix(x.value(), "layer_norm input");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (gain.value().size() != cols || bias.value().size() != cols) {
    throw std::invalid_argument("layer_norm: gain/bias width does not match " + shape_to_string(x.shape()));
  }
  Tensor xhat(x.shape());
  Tensor inv_std = Tensor::matrix(rows, 1);
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += x.value()(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = x.value()(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      xhat(r, c) = (x.value()(r, c) - mean) * inv;
      out(r, c) = xhat(r, c) * gain.value()[c] + bias.value()[c];
    }
  }
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, cols](Tape& t, const Tensor& g) {
        if (t.requires_grad(gain) || t.requires_grad(bias)) {
          Tensor gg(gain.shape());
          Tensor gb(bias.shape());
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              gg[c] += g(r, c) * xhat(r, c);
              gb[c] += g(r, c);
            }
          }
          t.accumulate(gain, gg);
          t.accumulate(bias, gb);
        }
        if (t.requires_grad(x)) {
          Tensor gx(x.shape());
          const double n = static_cast<double>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0;
            double mean_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              const double d = g(r, c) * gain.value()[c];
              mean_d += d;
              mean_dx += d * xhat(r, c);
            }
            mean_d /= n;
            mean_dx /= n;
            for (std::size_t c = 0; c < cols; ++c) {
              const double d = g(r, c) * gain.value()[c];
              gx(r, c) = inv_std[r] * (d - mean_d - xhat(r, c) * mean_dx);
            }
          }
          t.accumulate(x, gx);
        }
      });
}

Var dropout(const Var& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw std::invalid_argument("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  Tensor mask(x.shape());
  const double scale_kept = 1.0 / (1.0 - p);
  for (double& m : mask.values()) m = keep(rng) ? scale_kept : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return x.tape().record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Tensor& g) {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask[i];
    t.accumulate(x, gx);
  });
}

Var sum_all(const Var& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return x.tape().record(Tensor::scalar(total), {x}, [x](Tape& t, const Tensor& g) {
    t.accumulate(x, Tensor(x.shape(), g[0]));
  });
}

Var mse(const Var& pred, const Var& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("mse: shape mismatch " + shape_to_string(pred.shape()) + " vs " +
                                shape_to_string(target.shape()));
  }
  const std::size_t n = pred.value().size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.value()[i] - target.value()[i];
    total += d * d;
  }
  return pred.tape().record(Tensor::scalar(total / static_cast<double>(n)), {pred, target},
                            [pred, target, n](Tape& t, const Tensor& g) {
                              Tensor gp(pred.shape());
                              const double k = 2.0 * g[0] / static_cast<double>(n);
                              for (std::size_t i = 0; i < n; ++i) gp[i] = k * (pred.value()[i] - target.value()[i]);
                              if (t.requires_grad(pred)) t.accumulate(pred, gp);
                              if (t.requires_grad(target)) {
                                for (double& v : gp.values()) v = -v;
                                t.accumulate(target, gp);
                              }
                            });
}

}  // namespace higenet
