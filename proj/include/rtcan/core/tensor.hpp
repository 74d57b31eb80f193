// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rtcan/core/errors.hpp"
#include "rtcan/core/rng.hpp"

namespace rtcan {

using Shape = std::vector<int64_t>;

/// Allocator that skips value-initialization of trivial elements, so freshly
/// allocated tensors that are fully overwritten don't pay for a memset.
template <typename T>
struct NoInitAlloc : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = NoInitAlloc<U>;
  };
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) > 0) ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

/// Dense contiguous row-major tensor. Copies are deep; hot paths pass by
/// reference and autograd hands tensors around inside shared variable nodes.
template <typename T>
class Tensor {
 public:
  using Storage = std::vector<T, NoInitAlloc<T>>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(size_t(shape_numel(shape_)), T(0)) {}
  Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(size_t(shape_numel(shape_)), fill) {}
  Tensor(Shape shape, const std::vector<T>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (int64_t(data_.size()) != shape_numel(shape_))
      throw ShapeError("data size does not match shape " + shape_str(shape_));
  }

  /// Allocates without zero-filling; caller promises to overwrite every element.
  static Tensor uninit(Shape shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.resize(size_t(shape_numel(t.shape_)));
    return t;
  }

  bool empty() const { return data_.empty(); }
  int64_t numel() const { return int64_t(data_.size()); }
  int dim() const { return int(shape_.size()); }
  const Shape& shape() const { return shape_; }
  int64_t size(int i) const {
    if (i < 0) i += dim();
    return shape_[size_t(i)];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  Storage& vec() { return data_; }
  const Storage& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[size_t(i)]; }
  const T& operator[](int64_t i) const { return data_[size_t(i)]; }

  // Indexed access for the common ranks.
  T& at2(int64_t i, int64_t j) { return data_[size_t(i * shape_[1] + j)]; }
  const T& at2(int64_t i, int64_t j) const { return data_[size_t(i * shape_[1] + j)]; }
  T& at3(int64_t i, int64_t j, int64_t k) {
    return data_[size_t((i * shape_[1] + j) * shape_[2] + k)];
  }
  const T& at3(int64_t i, int64_t j, int64_t k) const {
    return data_[size_t((i * shape_[1] + j) * shape_[2] + k)];
  }
  T& at4(int64_t i, int64_t j, int64_t k, int64_t l) {
    return data_[size_t(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  const T& at4(int64_t i, int64_t j, int64_t k, int64_t l) const {
    return data_[size_t(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// In-place metadata reshape (tensor is always contiguous).
  void reshape(Shape s) {
    if (shape_numel(s) != numel())
      throw ShapeError("reshape " + shape_str(shape_) + " -> " + shape_str(s));
    shape_ = std::move(s);
  }

  Tensor reshaped(Shape s) const {
    Tensor t = *this;
    t.reshape(std::move(s));
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  T min() const { return *std::min_element(data_.begin(), data_.end()); }
  T max() const { return *std::max_element(data_.begin(), data_.end()); }
  double sum() const {
    double s = 0;
    for (const T& v : data_) s += double(v);
    return s;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (int64_t i = 0; i < numel(); ++i) out[i] = U(data_[size_t(i)]);
    return out;
  }

  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, double mean = 0.0) {
    Tensor t = uninit(std::move(shape));
    for (auto& v : t.data_) v = T(rng.normal(mean, stddev));
    return t;
  }

  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
    Tensor t = uninit(std::move(shape));
    for (auto& v : t.data_) v = T(rng.uniform(lo, hi));
    return t;
  }

 private:
  Shape shape_;
  Storage data_;
};

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(where) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace rtcan
