// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "rtcan/core/errors.hpp"

namespace rtcan::nn {

using json = nlohmann::json;

/// Fusion-block ablation selector.
///   A: full gated cross attention with channel+spatial attention
///   B: plain concat + 1x1 convolution (no gate)
///   C: gated cross attention without the attention blocks
enum class Scheme { A, B, C };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::A: return "A";
    case Scheme::B: return "B";
    case Scheme::C: return "C";
  }
  throw ConfigError("invalid scheme");
}

inline Scheme scheme_from_name(const std::string& s) {
  if (s == "A") return Scheme::A;
  if (s == "B") return Scheme::B;
  if (s == "C") return Scheme::C;
  throw ConfigError("unknown scheme '" + s + "' (expected A, B or C)");
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

struct ModelConfig {
  int backbone_depth = 50;  // 50 or 152
  Scheme scheme = Scheme::A;
  bool pretrained_backbone = false;
  std::string backbone_weights;  // tensor archive consumed when pretrained_backbone
  std::vector<int> gta_kernel_sizes = {1, 3, 5};
  bool gta_global_branch = true;
  bool gta_per_stage = false;
  int decoder_channels = 128;
  int attention_reduction = 16;
  bool spatial_attention_first = false;  // flips channel->spatial to spatial->channel

  static constexpr int num_classes = 2;
  static constexpr int rgb_in_channels = 3;
  static constexpr int thermal_in_channels = 1;

  void validate() const {
    if (backbone_depth != 50 && backbone_depth != 152)
      throw ConfigError("backbone_depth must be 50 or 152");
    if (gta_kernel_sizes.empty()) throw ConfigError("gta_kernel_sizes must be nonempty");
    for (int k : gta_kernel_sizes)
      if (k <= 0 || k % 2 == 0)
        throw ConfigError("gta_kernel_sizes must all be odd and positive, got " +
                          std::to_string(k));
    if (decoder_channels <= 0) throw ConfigError("decoder_channels must be positive");
    if (attention_reduction <= 0) throw ConfigError("attention_reduction must be positive");
    if (pretrained_backbone && backbone_weights.empty())
      throw ConfigError("pretrained_backbone requires backbone_weights (no weights bundled)");
  }

  json to_json() const {
    return json{{"backbone_depth", backbone_depth},
                {"scheme", scheme_name(scheme)},
                {"pretrained_backbone", pretrained_backbone},
                {"backbone_weights", backbone_weights},
                {"gta_kernel_sizes", gta_kernel_sizes},
                {"gta_global_branch", gta_global_branch},
                {"gta_per_stage", gta_per_stage},
                {"decoder_channels", decoder_channels},
                {"attention_reduction", attention_reduction},
                {"spatial_attention_first", spatial_attention_first}};
  }

  static ModelConfig from_json(const json& j) {
    reject_unknown_keys(j,
                        {"backbone_depth", "scheme", "pretrained_backbone", "backbone_weights",
                         "gta_kernel_sizes", "gta_global_branch", "gta_per_stage",
                         "decoder_channels", "attention_reduction", "spatial_attention_first"},
                        "model config");
    ModelConfig c;
    c.backbone_depth = j.value("backbone_depth", c.backbone_depth);
    if (j.contains("scheme")) c.scheme = scheme_from_name(j.at("scheme").get<std::string>());
    c.pretrained_backbone = j.value("pretrained_backbone", c.pretrained_backbone);
    c.backbone_weights = j.value("backbone_weights", c.backbone_weights);
    if (j.contains("gta_kernel_sizes"))
      c.gta_kernel_sizes = j.at("gta_kernel_sizes").get<std::vector<int>>();
    c.gta_global_branch = j.value("gta_global_branch", c.gta_global_branch);
    c.gta_per_stage = j.value("gta_per_stage", c.gta_per_stage);
    c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
    c.attention_reduction = j.value("attention_reduction", c.attention_reduction);
    c.spatial_attention_first = j.value("spatial_attention_first", c.spatial_attention_first);
    c.validate();
    return c;
  }
};

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= uint64_t(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical config JSON; guards checkpoint/model agreement.
inline uint64_t config_hash(const ModelConfig& c) { return fnv1a64(c.to_json().dump()); }

inline std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace rtcan::nn
