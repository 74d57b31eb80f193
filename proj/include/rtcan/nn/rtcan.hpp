// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "rtcan/nn/checkpoint.hpp"
#include "rtcan/nn/config.hpp"
#include "rtcan/nn/decoder.hpp"
#include "rtcan/nn/gta.hpp"
#include "rtcan/nn/rca.hpp"
#include "rtcan/nn/resnet.hpp"

namespace rtcan::nn {

inline constexpr std::array<int64_t, 5> kStageChannels = {64, 256, 512, 1024, 2048};

/// Two-stream RGB/thermal segmentation network: residual encoders, five
/// cross-attention fusion blocks, global textural attention, cascaded decoder.
template <typename T>
class RtcanNet : public Module<T> {
 public:
  explicit RtcanNet(const ModelConfig& config, uint64_t init_seed = 0) : config_(config) {
    config_.validate();
    Rng rng(Rng::mix(init_seed, 0x527443414eULL));
    enc_rgb_ = std::make_unique<ResNetEncoder<T>>(ModelConfig::rgb_in_channels,
                                                  config_.backbone_depth, rng);
    enc_thermal_ = std::make_unique<ResNetEncoder<T>>(ModelConfig::thermal_in_channels,
                                                      config_.backbone_depth, rng);
    this->register_module("encoder_rgb", enc_rgb_.get());
    this->register_module("encoder_thermal", enc_thermal_.get());
    for (size_t i = 0; i < 5; ++i) {
      rca_[i] = std::make_unique<RcaBlock<T>>(kStageChannels[i], config_.scheme,
                                              config_.attention_reduction,
                                              config_.spatial_attention_first, rng);
      this->register_module("rca" + std::to_string(i + 1), rca_[i].get());
    }
    if (config_.gta_per_stage) {
      for (size_t i = 0; i < 5; ++i) {
        gta_stages_[i] = std::make_unique<GtaBlock<T>>(kStageChannels[i], config_.gta_kernel_sizes,
                                                       config_.gta_global_branch,
                                                       config_.attention_reduction, rng);
        this->register_module("gta" + std::to_string(i + 1), gta_stages_[i].get());
      }
    } else {
      gta_ = std::make_unique<GtaBlock<T>>(kStageChannels[4], config_.gta_kernel_sizes,
                                           config_.gta_global_branch,
                                           config_.attention_reduction, rng);
      this->register_module("gta5", gta_.get());
    }
    decoder_ = std::make_unique<CascadedDecoder<T>>(config_.decoder_channels,
                                                    ModelConfig::num_classes, rng);
    this->register_module("decoder", decoder_.get());

    if (config_.pretrained_backbone) {
      const Archive ar = load_archive(config_.backbone_weights);
      load_backbone(ar, *enc_rgb_, false);
      load_backbone(ar, *enc_thermal_, true);
    }
  }

  const ModelConfig& config() const { return config_; }
  ResNetEncoder<T>& encoder_rgb() { return *enc_rgb_; }
  ResNetEncoder<T>& encoder_thermal() { return *enc_thermal_; }
  RcaBlock<T>& rca(size_t stage) { return *rca_[stage]; }
  GtaBlock<T>& gta() { return config_.gta_per_stage ? *gta_stages_[4] : *gta_; }
  CascadedDecoder<T>& decoder() { return *decoder_; }

  Prediction<T> forward(const Var<T>& rgb, const Var<T>& thermal) {
    if (rgb.value().dim() != 4 || thermal.value().dim() != 4)
      throw ShapeError("forward expects 4D inputs");
    if (rgb.size(0) != thermal.size(0) || rgb.size(2) != thermal.size(2) ||
        rgb.size(3) != thermal.size(3))
      throw ShapeError("rgb and thermal batches must agree: " + shape_str(rgb.shape()) + " vs " +
                       shape_str(thermal.shape()));
    const int64_t h = rgb.size(2), w = rgb.size(3);
    auto pyr_rgb = enc_rgb_->forward(rgb);
    auto pyr_thermal = enc_thermal_->forward(thermal);
    FeaturePyramid<T> fused;
    for (size_t i = 0; i < 5; ++i)
      fused.stages[i] = rca_[i]->forward(pyr_thermal.stages[i], pyr_rgb.stages[i]);
    if (config_.gta_per_stage) {
      for (size_t i = 0; i < 5; ++i) fused.stages[i] = gta_stages_[i]->forward(fused.stages[i]);
    } else {
      fused.stages[4] = gta_->forward(fused.stages[4]);
    }
    return decoder_->forward(fused, h, w);
  }

 private:
  /// Loads resnet-named tensors into one encoder. For the 1-channel stream the
  /// stem kernel is the pretrained 3-channel kernel summed over input channels.
  /// Extra archive entries (e.g. a classifier head) are ignored.
  static void load_backbone(const Archive& ar, ResNetEncoder<T>& enc, bool sum_stem_channels) {
    auto fetch = [&ar](const std::string& name) -> const ArchiveTensor& {
      auto it = ar.tensors.find(name);
      if (it == ar.tensors.end())
        throw IoError("backbone archive is missing tensor '" + name + "'");
      return it->second;
    };
    auto assign_from = [](const Tensor<float>& src, Tensor<T>& dst, const std::string& name) {
      if (src.shape() != dst.shape())
        throw IoError("backbone tensor '" + name + "' has shape " + shape_str(src.shape()) +
                      ", expected " + shape_str(dst.shape()));
      for (int64_t i = 0; i < dst.numel(); ++i) dst[i] = T(src[i]);
    };
    for (auto& [name, p] : enc.named_parameters()) {
      if (sum_stem_channels && name == "conv1.weight") {
        const Tensor<float>& src = fetch(name).data;
        if (src.dim() != 4 || src.size(1) != 3)
          throw IoError("backbone stem kernel must be [64,3,7,7] to fold into 1 channel");
        Tensor<T>& dst = p.value();
        for (int64_t o = 0; o < src.size(0); ++o)
          for (int64_t ki = 0; ki < src.size(2); ++ki)
            for (int64_t kj = 0; kj < src.size(3); ++kj) {
              double s = 0;
              for (int64_t c = 0; c < 3; ++c) s += double(src.at4(o, c, ki, kj));
              dst.at4(o, 0, ki, kj) = T(s);
            }
        continue;
      }
      assign_from(fetch(name).data, p.value(), name);
    }
    for (auto& [name, b] : enc.named_buffers()) assign_from(fetch(name).data, *b, name);
  }

  ModelConfig config_;
  std::unique_ptr<ResNetEncoder<T>> enc_rgb_;
  std::unique_ptr<ResNetEncoder<T>> enc_thermal_;
  std::array<std::unique_ptr<RcaBlock<T>>, 5> rca_;
  std::unique_ptr<GtaBlock<T>> gta_;
  std::array<std::unique_ptr<GtaBlock<T>>, 5> gta_stages_;
  std::unique_ptr<CascadedDecoder<T>> decoder_;
};

/// Per-pixel argmax over the two classes of logits_final; exact ties go to
/// background.
template <typename T>
Tensor<uint8_t> predict_mask(const Prediction<T>& pred) {
  const auto& lf = pred.logits_final.value();
  if (lf.dim() != 4 || lf.size(1) != 2) throw ShapeError("predict_mask expects [B,2,H,W] logits");
  const int64_t b = lf.size(0), h = lf.size(2), w = lf.size(3);
  const int64_t hw = h * w;
  Tensor<uint8_t> mask({b, h, w});
  const T* v = lf.data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t j = 0; j < hw; ++j)
      mask[bi * hw + j] = v[(bi * 2 + 1) * hw + j] > v[(bi * 2 + 0) * hw + j] ? 1 : 0;
  return mask;
}

}  // namespace rtcan::nn
