#include "higenet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace higenet {

namespace {

std::atomic<std::size_t> g_live_bytes{0};
std::atomic<std::size_t> g_peak_bytes{0};

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have rank >= 1");
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

void AllocationTracker::on_alloc(std::size_t bytes) noexcept {
  const std::size_t live = g_live_bytes.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::size_t peak = g_peak_bytes.load(std::memory_order_relaxed);
  while (live > peak && !g_peak_bytes.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
  }
}

void AllocationTracker::on_free(std::size_t bytes) noexcept {
  g_live_bytes.fetch_sub(bytes, std::memory_order_relaxed);
}

std::size_t AllocationTracker::live_bytes() noexcept { return g_live_bytes.load(std::memory_order_relaxed); }
std::size_t AllocationTracker::peak_bytes() noexcept { return g_peak_bytes.load(std::memory_order_relaxed); }
void AllocationTracker::reset_peak() noexcept {
  g_peak_bytes.store(g_live_bytes.load(std::memory_order_relaxed), std::memory_order_relaxed);
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::span<const double> values) : shape_(std::move(shape)) {
  validate_shape(shape_);
  if (values.size() != shape_size(shape_)) {
    throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                " does not match shape " + shape_to_string(shape_));
  }
  data_.assign(values.begin(), values.end());
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) { return Tensor({rows, cols}, fill); }

Tensor Tensor::scalar(double value) { return Tensor({1}, value); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw std::invalid_argument("from_rows: no rows");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("from_rows: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, flat);
}

Tensor Tensor::column(std::initializer_list<double> values) {
  std::vector<double> v(values);
  return Tensor({v.size(), 1}, v);
}

Tensor Tensor::uniform(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : t.values()) x = dist(rng);
  return t;
}

Tensor Tensor::normal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : t.values()) x = dist(rng);
  return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw std::invalid_argument("cols() on non-matrix shape " + shape_to_string(shape_));
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_to_string(shape_));
  return data_[0];
}

std::span<double> Tensor::grad() {
  if (grad_.empty()) throw std::logic_error("tensor has no gradient buffer");
  return {grad_.data(), grad_.size()};
}

std::span<const double> Tensor::grad() const {
  if (grad_.empty()) throw std::logic_error("tensor has no gradient buffer");
  return {grad_.data(), grad_.size()};
}

void Tensor::ensure_grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
}

void Tensor::zero_grad() {
  ensure_grad();
  std::fill(grad_.begin(), grad_.end(), 0.0);
}

void Tensor::drop_grad() noexcept {
  grad_.clear();
  grad_.shrink_to_fit();
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Tensor Tensor::reshaped(Shape shape) const {
  validate_shape(shape);
  if (shape_size(shape) != size()) {
    throw std::invalid_argument("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

void require_matrix(const Tensor& t, std::string_view what) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(what) + " must be a matrix, got shape " + shape_to_string(t.shape()));
  }
}

bool same_shape(const Tensor& a, const Tensor& b) noexcept { return a.shape() == b.shape(); }

ParamId ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  const ParamId id = entries_.size();
  index_.emplace(name, id);
  entries_.push_back({std::move(name), std::move(value)});
  return id;
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

ParamId ParamStore::id(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

}  // namespace higenet
