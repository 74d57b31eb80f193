// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "rtcan/nn/attention.hpp"
#include "rtcan/nn/config.hpp"
#include "rtcan/nn/layers.hpp"

namespace rtcan::nn {

/// RGB-assisted cross-attention fusion for one pyramid stage.
///
/// Scheme A: T * sigmoid(conv1x1(concat(T,R))), then channel and spatial
///           attention (order per config).
/// Scheme B: conv1x1(concat(T,R)) — plain fusion, no gate.
/// Scheme C: T * sigmoid(conv1x1(concat(T,R))) only.
template <typename T>
class RcaBlock : public Module<T> {
 public:
  RcaBlock(int64_t channels, Scheme scheme, int64_t attention_reduction, bool spatial_first,
           Rng& rng)
      : scheme_(scheme), spatial_first_(spatial_first) {
    if (scheme == Scheme::B) {
      fuse_conv_ = std::make_unique<Conv2d<T>>(2 * channels, channels, 1, 1, 0, true, rng);
      this->register_module("fuse_conv", fuse_conv_.get());
    } else {
      gate_conv_ = std::make_unique<Conv2d<T>>(2 * channels, channels, 1, 1, 0, true, rng);
      this->register_module("gate_conv", gate_conv_.get());
    }
    if (scheme == Scheme::A) {
      channel_attn_ = std::make_unique<ChannelAttention<T>>(channels, attention_reduction, rng);
      spatial_attn_ = std::make_unique<SpatialAttention<T>>(rng);
      this->register_module("channel_attn", channel_attn_.get());
      this->register_module("spatial_attn", spatial_attn_.get());
    }
  }

  /// The sigmoid gate map g = sigmoid(conv1x1(concat(T,R))); schemes A/C only.
  Var<T> gate(const Var<T>& thermal, const Var<T>& rgb) {
    check_inputs(thermal, rgb);
    return ag::sigmoid(gate_conv_->forward(ag::concat_channels<T>({thermal, rgb})));
  }

  /// The gated thermal feature T * g (the pre-attention intermediate of
  /// scheme A and the whole of scheme C).
  Var<T> gated(const Var<T>& thermal, const Var<T>& rgb) {
    return ag::mul(thermal, gate(thermal, rgb));
  }

  Var<T> forward(const Var<T>& thermal, const Var<T>& rgb) {
    check_inputs(thermal, rgb);
    if (scheme_ == Scheme::B)
      return fuse_conv_->forward(ag::concat_channels<T>({thermal, rgb}));
    auto m = gated(thermal, rgb);
    if (scheme_ == Scheme::C) return m;
    if (spatial_first_) return channel_attn_->forward(spatial_attn_->forward(m));
    return spatial_attn_->forward(channel_attn_->forward(m));
  }

 private:
  static void check_inputs(const Var<T>& thermal, const Var<T>& rgb) {
    check_same_shape(thermal.value(), rgb.value(), "rca_forward");
  }

  Scheme scheme_;
  bool spatial_first_;
  std::unique_ptr<Conv2d<T>> gate_conv_;
  std::unique_ptr<Conv2d<T>> fuse_conv_;
  std::unique_ptr<ChannelAttention<T>> channel_attn_;
  std::unique_ptr<SpatialAttention<T>> spatial_attn_;
};

}  // namespace rtcan::nn
