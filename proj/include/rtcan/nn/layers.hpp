// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "rtcan/autograd/ops.hpp"
#include "rtcan/core/rng.hpp"
#include "rtcan/nn/module.hpp"

namespace rtcan::nn {

template <typename T>
class Conv2d : public Module<T> {
 public:
  Conv2d(int64_t in_ch, int64_t out_ch, int kernel, int stride, int pad, bool bias, Rng& rng)
      : stride_(stride), pad_(pad), has_bias_(bias) {
    const double fan_in = double(in_ch) * kernel * kernel;
    const double stddev = std::sqrt(2.0 / fan_in);
    weight_ = Var<T>(Tensor<T>::randn({out_ch, in_ch, kernel, kernel}, rng, stddev));
    this->register_parameter("weight", weight_);
    if (bias) {
      bias_ = Var<T>(Tensor<T>({out_ch}));
      this->register_parameter("bias", bias_);
    }
  }

  Var<T> forward(const Var<T>& x) {
    return ag::conv2d(x, weight_, has_bias_ ? &bias_ : nullptr, stride_, pad_);
  }

  Var<T>& weight() { return weight_; }
  Var<T>& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }

 private:
  Var<T> weight_;
  Var<T> bias_;
  int stride_;
  int pad_;
  bool has_bias_;
};

template <typename T>
class BatchNorm2d : public Module<T> {
 public:
  explicit BatchNorm2d(int64_t channels) {
    gamma_ = Var<T>(Tensor<T>({channels}, T(1)));
    beta_ = Var<T>(Tensor<T>({channels}));
    running_mean_ = Tensor<T>({channels});
    running_var_ = Tensor<T>({channels}, T(1));
    this->register_parameter("weight", gamma_);
    this->register_parameter("bias", beta_);
    this->register_buffer("running_mean", &running_mean_);
    this->register_buffer("running_var", &running_var_);
  }

  Var<T> forward(const Var<T>& x) {
    return ag::batch_norm(x, gamma_, beta_, running_mean_, running_var_, this->training());
  }

 private:
  Var<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
};

/// conv (no bias) -> batch norm -> optional relu
template <typename T>
class ConvBn : public Module<T> {
 public:
  ConvBn(int64_t in_ch, int64_t out_ch, int kernel, int stride, int pad, bool relu, Rng& rng)
      : conv_(std::make_unique<Conv2d<T>>(in_ch, out_ch, kernel, stride, pad, false, rng)),
        bn_(std::make_unique<BatchNorm2d<T>>(out_ch)),
        relu_(relu) {
    this->register_module("conv", conv_.get());
    this->register_module("bn", bn_.get());
  }

  Var<T> forward(const Var<T>& x) {
    auto y = bn_->forward(conv_->forward(x));
    return relu_ ? ag::relu(y) : y;
  }

 private:
  std::unique_ptr<Conv2d<T>> conv_;
  std::unique_ptr<BatchNorm2d<T>> bn_;
  bool relu_;
};

}  // namespace rtcan::nn
