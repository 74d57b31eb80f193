// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "rtcan/nn/attention.hpp"
#include "rtcan/nn/config.hpp"
#include "rtcan/nn/layers.hpp"

namespace rtcan::nn {

/// Width of the internal branch bottleneck: full width for small feature
/// maps, C/8 once channels grow past 256 (keeps the multi-kernel branches
/// affordable at the 2048-channel stage).
inline int64_t gta_branch_width(int64_t channels) {
  return std::max<int64_t>(channels / 8, std::min<int64_t>(channels, 32));
}

/// Global textural attention: parallel multi-kernel conv branches (plus an
/// optional global-average branch), concatenated, reduced back to the input
/// channel count by a 1x1 conv, then rescaled by channel self-attention.
template <typename T>
class GtaBlock : public Module<T> {
 public:
  GtaBlock(int64_t channels, const std::vector<int>& kernel_sizes, bool global_branch,
           int64_t attention_reduction, Rng& rng)
      : channels_(channels), global_branch_(global_branch) {
    for (int k : kernel_sizes)
      if (k <= 0 || k % 2 == 0)
        throw ConfigError("GTA kernel sizes must be odd, got " + std::to_string(k));
    const int64_t width = gta_branch_width(channels);
    entry_ = std::make_unique<Conv2d<T>>(channels, width, 1, 1, 0, true, rng);
    this->register_module("entry", entry_.get());
    int bi = 0;
    for (int k : kernel_sizes) {
      branches_.push_back(std::make_unique<Conv2d<T>>(width, width, k, 1, (k - 1) / 2, true, rng));
      this->register_module("branch" + std::to_string(bi++), branches_.back().get());
    }
    if (global_branch_) {
      global_conv_ = std::make_unique<Conv2d<T>>(channels, width, 1, 1, 0, true, rng);
      this->register_module("global_conv", global_conv_.get());
    }
    const int64_t concat_ch = width * int64_t(branches_.size() + (global_branch_ ? 1 : 0));
    reduce_ = std::make_unique<Conv2d<T>>(concat_ch, channels, 1, 1, 0, true, rng);
    this->register_module("reduce", reduce_.get());
    attn_ = std::make_unique<ChannelAttention<T>>(channels, attention_reduction, rng);
    this->register_module("attn", attn_.get());
  }

  Var<T> forward(const Var<T>& x) {
    if (x.size(1) != channels_)
      throw ShapeError("gta_forward expects " + std::to_string(channels_) + " channels, got " +
                       shape_str(x.shape()));
    auto inner = entry_->forward(x);
    std::vector<Var<T>> feats;
    feats.reserve(branches_.size() + 1);
    for (auto& br : branches_) feats.push_back(br->forward(inner));
    if (global_branch_)
      feats.push_back(
          ag::broadcast_hw(global_conv_->forward(ag::global_avg_pool(x)), x.size(2), x.size(3)));
    auto reduced = reduce_->forward(ag::concat_channels<T>(feats));
    return attn_->forward(reduced);
  }

 private:
  int64_t channels_;
  bool global_branch_;
  std::unique_ptr<Conv2d<T>> entry_;
  std::vector<std::unique_ptr<Conv2d<T>>> branches_;
  std::unique_ptr<Conv2d<T>> global_conv_;
  std::unique_ptr<Conv2d<T>> reduce_;
  std::unique_ptr<ChannelAttention<T>> attn_;
};

}  // namespace rtcan::nn
