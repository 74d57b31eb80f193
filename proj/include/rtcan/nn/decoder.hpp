// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "rtcan/nn/layers.hpp"
#include "rtcan/nn/resnet.hpp"

namespace rtcan::nn {

template <typename T>
struct Prediction {
  Var<T> logits_deep;     // [B,2,H,W]
  Var<T> logits_shallow;  // [B,2,H,W]
  Var<T> logits_final;    // elementwise mean of the two
};

/// Cascaded two-head decoder. The deep aggregation head consumes stages 3-5,
/// the shallow head stages 1-2; a sigmoid map from the deep head gates the
/// shallow features before their final projection, and the heads' upsampled
/// logits are averaged.
template <typename T>
class CascadedDecoder : public Module<T> {
 public:
  CascadedDecoder(int64_t d, int64_t num_classes, Rng& rng) {
    reduce5_ = std::make_unique<ConvBn<T>>(2048, d, 1, 1, 0, true, rng);
    reduce4_ = std::make_unique<ConvBn<T>>(1024, d, 1, 1, 0, true, rng);
    reduce3_ = std::make_unique<ConvBn<T>>(512, d, 1, 1, 0, true, rng);
    fuse54_ = std::make_unique<ConvBn<T>>(2 * d, d, 3, 1, 1, true, rng);
    fuse43_ = std::make_unique<ConvBn<T>>(2 * d, d, 3, 1, 1, true, rng);
    deep_head_ = std::make_unique<Conv2d<T>>(d, num_classes, 1, 1, 0, true, rng);
    gate_conv_ = std::make_unique<Conv2d<T>>(d, 1, 1, 1, 0, true, rng);
    reduce2_ = std::make_unique<ConvBn<T>>(256, d, 1, 1, 0, true, rng);
    reduce1_ = std::make_unique<ConvBn<T>>(64, d, 1, 1, 0, true, rng);
    fuse21_ = std::make_unique<ConvBn<T>>(2 * d, d, 3, 1, 1, true, rng);
    shallow_head_ = std::make_unique<Conv2d<T>>(d, num_classes, 1, 1, 0, true, rng);
    this->register_module("reduce5", reduce5_.get());
    this->register_module("reduce4", reduce4_.get());
    this->register_module("reduce3", reduce3_.get());
    this->register_module("fuse54", fuse54_.get());
    this->register_module("fuse43", fuse43_.get());
    this->register_module("deep_head", deep_head_.get());
    this->register_module("gate_conv", gate_conv_.get());
    this->register_module("reduce2", reduce2_.get());
    this->register_module("reduce1", reduce1_.get());
    this->register_module("fuse21", fuse21_.get());
    this->register_module("shallow_head", shallow_head_.get());
  }

  Prediction<T> forward(const FeaturePyramid<T>& pyr, int64_t out_h, int64_t out_w) {
    for (const auto& s : pyr.stages)
      if (s.numel() == 0) throw ShapeError("decode: missing pyramid stage");
    const auto& f1 = pyr.stages[0];
    const auto& f2 = pyr.stages[1];
    const auto& f3 = pyr.stages[2];
    const auto& f4 = pyr.stages[3];
    const auto& f5 = pyr.stages[4];

    auto x = reduce5_->forward(f5);
    x = ag::resize_bilinear(x, f4.size(2), f4.size(3));
    x = fuse54_->forward(ag::concat_channels<T>({x, reduce4_->forward(f4)}));
    x = ag::resize_bilinear(x, f3.size(2), f3.size(3));
    x = fuse43_->forward(ag::concat_channels<T>({x, reduce3_->forward(f3)}));

    Prediction<T> pred;
    pred.logits_deep = ag::resize_bilinear(deep_head_->forward(x), out_h, out_w);
    auto gate = ag::sigmoid(gate_conv_->forward(x));

    auto y = reduce2_->forward(f2);
    y = ag::resize_bilinear(y, f1.size(2), f1.size(3));
    y = fuse21_->forward(ag::concat_channels<T>({y, reduce1_->forward(f1)}));
    y = ag::mul_spatial(y, ag::resize_bilinear(gate, f1.size(2), f1.size(3)));
    pred.logits_shallow = ag::resize_bilinear(shallow_head_->forward(y), out_h, out_w);

    pred.logits_final = ag::lincomb(T(0.5), pred.logits_deep, T(0.5), pred.logits_shallow);
    return pred;
  }

 private:
  std::unique_ptr<ConvBn<T>> reduce5_, reduce4_, reduce3_, fuse54_, fuse43_;
  std::unique_ptr<Conv2d<T>> deep_head_, gate_conv_;
  std::unique_ptr<ConvBn<T>> reduce2_, reduce1_, fuse21_;
  std::unique_ptr<Conv2d<T>> shallow_head_;
};

}  // namespace rtcan::nn
