// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rtcan/autograd/variable.hpp"

namespace rtcan::nn {

using ag::Var;

/// Base class with a named parameter/buffer registry; names are
/// dot-joined through the module tree, which fixes the checkpoint schema.
template <typename T>
class Module {
 public:
  virtual ~Module() = default;

  void register_parameter(const std::string& name, Var<T> p) {
    p.set_requires_grad(true);
    params_.emplace_back(name, std::move(p));
  }
  void register_buffer(const std::string& name, Tensor<T>* buf) {
    buffers_.emplace_back(name, buf);
  }
  void register_module(const std::string& name, Module<T>* m) {
    children_.emplace_back(name, m);
  }

  void named_parameters(std::vector<std::pair<std::string, Var<T>>>& out,
                        const std::string& prefix = "") const {
    for (const auto& [n, p] : params_) out.emplace_back(prefix + n, p);
    for (const auto& [n, m] : children_) m->named_parameters(out, prefix + n + ".");
  }
  std::vector<std::pair<std::string, Var<T>>> named_parameters() const {
    std::vector<std::pair<std::string, Var<T>>> out;
    named_parameters(out);
    return out;
  }

  void named_buffers(std::vector<std::pair<std::string, Tensor<T>*>>& out,
                     const std::string& prefix = "") const {
    for (const auto& [n, b] : buffers_) out.emplace_back(prefix + n, b);
    for (const auto& [n, m] : children_) m->named_buffers(out, prefix + n + ".");
  }
  std::vector<std::pair<std::string, Tensor<T>*>> named_buffers() const {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    named_buffers(out);
    return out;
  }

  std::vector<Var<T>> parameters() const {
    std::vector<Var<T>> out;
    for (const auto& [n, p] : named_parameters()) out.push_back(p);
    return out;
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
  }

  void train(bool on = true) {
    training_ = on;
    for (auto& [n, m] : children_) m->train(on);
  }
  void eval() { train(false); }
  bool training() const { return training_; }

  void zero_grad() {
    for (auto& p : parameters()) p.zero_grad();
  }

 protected:
  bool training_ = true;

 private:
  std::vector<std::pair<std::string, Var<T>>> params_;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers_;
  std::vector<std::pair<std::string, Module<T>*>> children_;
};

}  // namespace rtcan::nn
