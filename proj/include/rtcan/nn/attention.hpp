// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <memory>

#include "rtcan/nn/layers.hpp"

namespace rtcan::nn {

/// Squeeze-excitation channel gate: global average pool -> 1x1 reduce ->
/// relu -> 1x1 expand -> sigmoid, multiplied back per channel.
template <typename T>
class ChannelAttention : public Module<T> {
 public:
  ChannelAttention(int64_t channels, int64_t reduction, Rng& rng)
      : fc1_(std::make_unique<Conv2d<T>>(channels, std::max<int64_t>(1, channels / reduction), 1,
                                         1, 0, true, rng)),
        fc2_(std::make_unique<Conv2d<T>>(std::max<int64_t>(1, channels / reduction), channels, 1,
                                         1, 0, true, rng)) {
    this->register_module("fc1", fc1_.get());
    this->register_module("fc2", fc2_.get());
  }

  Var<T> gate(const Var<T>& x) {
    auto s = ag::global_avg_pool(x);
    return ag::sigmoid(fc2_->forward(ag::relu(fc1_->forward(s))));
  }

  Var<T> forward(const Var<T>& x) { return ag::mul_channel(x, gate(x)); }

 private:
  std::unique_ptr<Conv2d<T>> fc1_;
  std::unique_ptr<Conv2d<T>> fc2_;
};

/// Spatial gate: channel mean/max maps -> 7x7 conv -> sigmoid, multiplied
/// back per position.
template <typename T>
class SpatialAttention : public Module<T> {
 public:
  explicit SpatialAttention(Rng& rng)
      : conv_(std::make_unique<Conv2d<T>>(2, 1, 7, 1, 3, true, rng)) {
    this->register_module("conv", conv_.get());
  }

  Var<T> gate(const Var<T>& x) {
    auto stats = ag::concat_channels<T>({ag::channel_mean_map(x), ag::channel_max_map(x)});
    return ag::sigmoid(conv_->forward(stats));
  }

  Var<T> forward(const Var<T>& x) { return ag::mul_spatial(x, gate(x)); }

 private:
  std::unique_ptr<Conv2d<T>> conv_;
};

}  // namespace rtcan::nn
