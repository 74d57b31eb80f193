// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "rtcan/core/tensor.hpp"

namespace rtcan::ag {

template <typename T>
struct VarImpl {
  Tensor<T> value;
  Tensor<T> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty() && value.numel() > 0) grad = Tensor<T>(value.shape());
  }
};

/// Cheap handle to a tensor node. Copies share the underlying node.
template <typename T>
class Var {
 public:
  Var() : p_(std::make_shared<VarImpl<T>>()) {}
  explicit Var(Tensor<T> v, bool requires_grad = false) : p_(std::make_shared<VarImpl<T>>()) {
    p_->value = std::move(v);
    p_->requires_grad = requires_grad;
  }

  Tensor<T>& value() { return p_->value; }
  const Tensor<T>& value() const { return p_->value; }
  const Shape& shape() const { return p_->value.shape(); }
  int64_t numel() const { return p_->value.numel(); }
  int64_t size(int i) const { return p_->value.size(i); }

  bool requires_grad() const { return p_->requires_grad; }
  void set_requires_grad(bool rg) { p_->requires_grad = rg; }

  Tensor<T>& grad() {
    p_->ensure_grad();
    return p_->grad;
  }
  bool has_grad() const { return !p_->grad.empty(); }
  void zero_grad() {
    if (!p_->grad.empty()) p_->grad.fill(T(0));
  }

  std::shared_ptr<VarImpl<T>> node() const { return p_; }

 private:
  std::shared_ptr<VarImpl<T>> p_;
};

/// Reverse-mode tape. Ops append backward closures in creation order; running
/// them in reverse is a valid reverse-topological order of the DAG.
template <typename T>
class Tape {
 public:
  static Tape*& current() {
    thread_local Tape* t = nullptr;
    return t;
  }
  static bool recording() { return current() != nullptr; }

  void push(std::function<void()> fn) { steps_.push_back(std::move(fn)); }
  size_t size() const { return steps_.size(); }

  /// Seeds root's grad with ones and propagates through the recorded graph.
  void backward(Var<T>& root) {
    root.grad().fill(T(1));
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    steps_.clear();
  }

  void clear() { steps_.clear(); }

 private:
  std::vector<std::function<void()>> steps_;
};

/// RAII: makes a fresh tape the active one (enables recording).
template <typename T>
class TapeScope {
 public:
  TapeScope() : prev_(Tape<T>::current()) { Tape<T>::current() = &tape_; }
  ~TapeScope() { Tape<T>::current() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  Tape<T>& tape() { return tape_; }

 private:
  Tape<T> tape_;
  Tape<T>* prev_;
};

/// RAII: disables recording (evaluation-mode forward).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : prev_(Tape<T>::current()) { Tape<T>::current() = nullptr; }
  ~NoGradScope() { Tape<T>::current() = prev_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* prev_;
};

template <typename T>
bool tracked(const Var<T>& a) {
  return Tape<T>::recording() && a.requires_grad();
}
template <typename T>
bool tracked(const Var<T>& a, const Var<T>& b) {
  return Tape<T>::recording() && (a.requires_grad() || b.requires_grad());
}

}  // namespace rtcan::ag
