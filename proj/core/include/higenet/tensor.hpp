#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace higenet {

// Process-wide live/peak byte accounting for tensor buffers. Used by the
// benchmark harness to report transient memory of attention kernels.
class AllocationTracker {
 public:
  static void on_alloc(std::size_t bytes) noexcept;
  static void on_free(std::size_t bytes) noexcept;
  static std::size_t live_bytes() noexcept;
  static std::size_t peak_bytes() noexcept;
  // Resets the peak to the current live value.
  static void reset_peak() noexcept;
};

template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    AllocationTracker::on_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    AllocationTracker::on_free(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  friend bool operator==(const TrackingAllocator&, const TrackingAllocator&) noexcept {
    return true;
  }
};

using Buffer = std::vector<double, TrackingAllocator<double>>;
using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major float64 array with an optional gradient buffer of the same
// shape. Extents are always positive.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::span<const double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor scalar(double value);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  // L×1 column vector.
  static Tensor column(std::initializer_list<double> values);
  static Tensor uniform(Shape shape, double bound, Rng& rng);
  static Tensor normal(Shape shape, double stddev, Rng& rng);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t rows() const { return extent(0); }
  // Second extent of a rank-2 tensor.
  std::size_t cols() const;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const double> values() const noexcept { return {data_.data(), data_.size()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double item() const;

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<double> grad();
  std::span<const double> grad() const;
  void ensure_grad();
  void zero_grad();
  void drop_grad() noexcept;

  bool all_finite() const noexcept;
  Tensor reshaped(Shape shape) const;
  void fill(double value) noexcept;

 private:
  Shape shape_;
  Buffer data_;
  Buffer grad_;
};

// Throws std::invalid_argument unless `t` is rank 2.
void require_matrix(const Tensor& t, std::string_view what);
bool same_shape(const Tensor& a, const Tensor& b) noexcept;

using ParamId = std::size_t;

// Named learnable parameters. Iteration order is insertion order, which is
// also checkpoint order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  ParamId add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  ParamId id(std::string_view name) const;

  Tensor& operator[](ParamId id) { return entries_.at(id).value; }
  const Tensor& operator[](ParamId id) const { return entries_.at(id).value; }
  Tensor& at(std::string_view name) { return (*this)[id(name)]; }
  const Tensor& at(std::string_view name) const { return (*this)[id(name)]; }
  const std::string& name(ParamId id) const { return entries_.at(id).name; }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;
  void zero_grad();

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::deque<Entry> entries_;
  std::map<std::string, ParamId, std::less<>> index_;
};

}  // namespace higenet
