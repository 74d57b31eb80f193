// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "rtcan/nn/layers.hpp"

namespace rtcan::nn {

/// Five feature maps at strides (2,4,8,16,32) with channels (64,256,512,1024,2048).
template <typename T>
struct FeaturePyramid {
  std::array<Var<T>, 5> stages;
};

template <typename T>
class Bottleneck : public Module<T> {
 public:
  Bottleneck(int64_t in_ch, int64_t mid_ch, int stride, Rng& rng)
      : conv1_(std::make_unique<Conv2d<T>>(in_ch, mid_ch, 1, 1, 0, false, rng)),
        bn1_(std::make_unique<BatchNorm2d<T>>(mid_ch)),
        conv2_(std::make_unique<Conv2d<T>>(mid_ch, mid_ch, 3, stride, 1, false, rng)),
        bn2_(std::make_unique<BatchNorm2d<T>>(mid_ch)),
        conv3_(std::make_unique<Conv2d<T>>(mid_ch, mid_ch * 4, 1, 1, 0, false, rng)),
        bn3_(std::make_unique<BatchNorm2d<T>>(mid_ch * 4)) {
    this->register_module("conv1", conv1_.get());
    this->register_module("bn1", bn1_.get());
    this->register_module("conv2", conv2_.get());
    this->register_module("bn2", bn2_.get());
    this->register_module("conv3", conv3_.get());
    this->register_module("bn3", bn3_.get());
    if (stride != 1 || in_ch != mid_ch * 4) {
      down_conv_ = std::make_unique<Conv2d<T>>(in_ch, mid_ch * 4, 1, stride, 0, false, rng);
      down_bn_ = std::make_unique<BatchNorm2d<T>>(mid_ch * 4);
      this->register_module("downsample.0", down_conv_.get());
      this->register_module("downsample.1", down_bn_.get());
    }
  }

  Var<T> forward(const Var<T>& x) {
    auto y = ag::relu(bn1_->forward(conv1_->forward(x)));
    y = ag::relu(bn2_->forward(conv2_->forward(y)));
    y = bn3_->forward(conv3_->forward(y));
    auto skip = down_conv_ ? down_bn_->forward(down_conv_->forward(x)) : x;
    return ag::relu(ag::add(y, skip));
  }

 private:
  std::unique_ptr<Conv2d<T>> conv1_;
  std::unique_ptr<BatchNorm2d<T>> bn1_;
  std::unique_ptr<Conv2d<T>> conv2_;
  std::unique_ptr<BatchNorm2d<T>> bn2_;
  std::unique_ptr<Conv2d<T>> conv3_;
  std::unique_ptr<BatchNorm2d<T>> bn3_;
  std::unique_ptr<Conv2d<T>> down_conv_;
  std::unique_ptr<BatchNorm2d<T>> down_bn_;
};

inline std::array<int, 4> resnet_block_counts(int depth) {
  if (depth == 50) return {3, 4, 6, 3};
  if (depth == 152) return {3, 8, 36, 3};
  throw ConfigError("unsupported backbone depth " + std::to_string(depth) +
                    " (supported: 50, 152)");
}

/// Residual bottleneck encoder; emits the stem output plus the four stage
/// outputs as a five-level pyramid.
template <typename T>
class ResNetEncoder : public Module<T> {
 public:
  ResNetEncoder(int64_t in_channels, int depth, Rng& rng) : in_channels_(in_channels) {
    const auto counts = resnet_block_counts(depth);
    conv1_ = std::make_unique<Conv2d<T>>(in_channels, 64, 7, 2, 3, false, rng);
    bn1_ = std::make_unique<BatchNorm2d<T>>(64);
    this->register_module("conv1", conv1_.get());
    this->register_module("bn1", bn1_.get());
    const int64_t mids[4] = {64, 128, 256, 512};
    int64_t in_ch = 64;
    for (int s = 0; s < 4; ++s) {
      const int stride = s == 0 ? 1 : 2;
      for (int i = 0; i < counts[size_t(s)]; ++i) {
        blocks_[size_t(s)].push_back(
            std::make_unique<Bottleneck<T>>(i == 0 ? in_ch : mids[s] * 4, mids[s],
                                            i == 0 ? stride : 1, rng));
        this->register_module("layer" + std::to_string(s + 1) + "." + std::to_string(i),
                              blocks_[size_t(s)].back().get());
      }
      in_ch = mids[s] * 4;
    }
  }

  int64_t in_channels() const { return in_channels_; }
  Var<T>& stem_weight() { return conv1_->weight(); }

  FeaturePyramid<T> forward(const Var<T>& x) {
    if (x.value().dim() != 4 || x.size(1) != in_channels_)
      throw ShapeError("encoder expects [B," + std::to_string(in_channels_) + ",H,W], got " +
                       shape_str(x.shape()));
    if (x.size(2) % 32 != 0 || x.size(3) % 32 != 0)
      throw ShapeError("encoder spatial size must be divisible by 32, got " +
                       shape_str(x.shape()));
    FeaturePyramid<T> pyr;
    auto s1 = ag::relu(bn1_->forward(conv1_->forward(x)));
    pyr.stages[0] = s1;
    auto y = ag::max_pool2d(s1, 3, 2, 1);
    for (int s = 0; s < 4; ++s) {
      for (auto& blk : blocks_[size_t(s)]) y = blk->forward(y);
      pyr.stages[size_t(s + 1)] = y;
    }
    return pyr;
  }

 private:
  int64_t in_channels_;
  std::unique_ptr<Conv2d<T>> conv1_;
  std::unique_ptr<BatchNorm2d<T>> bn1_;
  std::array<std::vector<std::unique_ptr<Bottleneck<T>>>, 4> blocks_;
};

}  // namespace rtcan::nn
