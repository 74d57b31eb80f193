// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "rtcan/autograd/ops.hpp"
#include "rtcan/nn/config.hpp"

namespace rtcan {

struct LossConfig {
  double dice_weight = 0.5;
  double sce_weight = 0.5;
  double label_smoothing = 0.1;  // epsilon in [0, 0.5)
  double dice_epsilon = 1.0;

  void validate() const {
    if (std::abs(dice_weight + sce_weight - 1.0) > 1e-9)
      throw ConfigError("loss weights must sum to 1");
    if (label_smoothing < 0.0 || label_smoothing >= 0.5)
      throw ConfigError("label_smoothing must lie in [0, 0.5)");
    if (dice_epsilon <= 0.0) throw ConfigError("dice_epsilon must be positive");
  }

  nn::json to_json() const {
    return nn::json{{"dice_weight", dice_weight},
                    {"sce_weight", sce_weight},
                    {"label_smoothing", label_smoothing},
                    {"dice_epsilon", dice_epsilon}};
  }

  static LossConfig from_json(const nn::json& j) {
    nn::reject_unknown_keys(j, {"dice_weight", "sce_weight", "label_smoothing", "dice_epsilon"},
                            "loss config");
    LossConfig c;
    c.dice_weight = j.value("dice_weight", c.dice_weight);
    c.sce_weight = j.value("sce_weight", c.sce_weight);
    c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
    c.dice_epsilon = j.value("dice_epsilon", c.dice_epsilon);
    c.validate();
    return c;
  }
};

namespace detail {
inline void check_binary_mask(const Tensor<uint8_t>& m, const char* where) {
  for (int64_t i = 0; i < m.numel(); ++i)
    if (m[i] > 1) throw ValueError(std::string(where) + ": target mask must be binary");
}
}  // namespace detail

/// Soft Dice loss over the gas-probability map [B,H,W] against a binary mask.
/// Dice is computed per sample, then averaged: 1 - (2*sum(p*g)+eps)/(sum(p)+sum(g)+eps).
template <typename T>
ag::Var<T> dice_loss(const ag::Var<T>& probs, const Tensor<uint8_t>& target, T eps) {
  if (eps < T(0)) throw ValueError("dice_loss: eps must be non-negative");
  const auto& pv = probs.value();
  if (pv.dim() != 3) throw ShapeError("dice_loss expects probs [B,H,W]");
  if (pv.shape() != target.shape())
    throw ShapeError("dice_loss: probs/target shape mismatch " + shape_str(pv.shape()) + " vs " +
                     shape_str(target.shape()));
  detail::check_binary_mask(target, "dice_loss");
  const int64_t b = pv.size(0), hw = pv.size(1) * pv.size(2);
  const T* p = pv.data();
  for (int64_t i = 0; i < pv.numel(); ++i)
    if (!(p[i] >= T(0) && p[i] <= T(1)))
      throw ValueError("dice_loss: probabilities must lie in [0,1]");

  auto inter = std::make_shared<std::vector<double>>(size_t(b));
  auto den = std::make_shared<std::vector<double>>(size_t(b));
  double loss = 0;
  for (int64_t bi = 0; bi < b; ++bi) {
    double si = 0, sp = 0, sg = 0;
    const T* pp = p + bi * hw;
    const uint8_t* gp = target.data() + bi * hw;
    for (int64_t j = 0; j < hw; ++j) {
      sp += double(pp[j]);
      if (gp[j]) {
        si += double(pp[j]);
        sg += 1.0;
      }
    }
    (*inter)[size_t(bi)] = 2.0 * si + double(eps);
    (*den)[size_t(bi)] = sp + sg + double(eps);
    loss += 1.0 - (*inter)[size_t(bi)] / (*den)[size_t(bi)];
  }
  ag::Var<T> y(Tensor<T>({1}));
  y.value()[0] = T(loss / double(b));

  if (ag::tracked(probs)) {
    y.set_requires_grad(true);
    auto tgt = std::make_shared<Tensor<uint8_t>>(target);
    ag::Tape<T>::current()->push([b, hw, inter, den, tgt, pn = probs.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      pn->ensure_grad();
      const T gy = yn->grad[0];
      T* gp = pn->grad.data();
      const uint8_t* gv = tgt->data();
      for (int64_t bi = 0; bi < b; ++bi) {
        const double num = (*inter)[size_t(bi)];
        const double d = (*den)[size_t(bi)];
        for (int64_t j = 0; j < hw; ++j) {
          const double g = gv[bi * hw + j] ? 2.0 : 0.0;
          gp[bi * hw + j] += T(double(gy) / double(b) * (num - g * d) / (d * d));
        }
      }
    });
  }
  return y;
}

/// Cross entropy of [B,2,H,W] logits against label-smoothed binary targets,
/// averaged over all pixels. A gas pixel's target distribution is
/// [eps, 1-eps] over [background, gas].
template <typename T>
ag::Var<T> soft_ce_loss(const ag::Var<T>& logits, const Tensor<uint8_t>& target, T epsilon) {
  const auto& lv = logits.value();
  if (lv.dim() != 4 || lv.size(1) != 2) throw ShapeError("soft_ce_loss expects [B,2,H,W] logits");
  if (lv.size(0) != target.size(0) || lv.size(2) != target.size(1) ||
      lv.size(3) != target.size(2))
    throw ShapeError("soft_ce_loss: logits/target shape mismatch");
  if (epsilon < T(0) || epsilon >= T(0.5))
    throw ValueError("soft_ce_loss: label smoothing must lie in [0, 0.5)");
  if (!lv.all_finite()) throw ValueError("soft_ce_loss: logits contain non-finite values");
  detail::check_binary_mask(target, "soft_ce_loss");

  const int64_t b = lv.size(0), hw = lv.size(2) * lv.size(3);
  const int64_t n = b * hw;
  const T* x = lv.data();
  double loss = 0;
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t j = 0; j < hw; ++j) {
      const double x0 = double(x[(bi * 2 + 0) * hw + j]);
      const double x1 = double(x[(bi * 2 + 1) * hw + j]);
      const double m = std::max(x0, x1);
      const double lse = m + std::log(std::exp(x0 - m) + std::exp(x1 - m));
      const double q1 = target[bi * hw + j] ? 1.0 - double(epsilon) : double(epsilon);
      // -sum_c q_c (x_c - lse)
      loss += lse - (1.0 - q1) * x0 - q1 * x1;
    }
  ag::Var<T> y(Tensor<T>({1}));
  y.value()[0] = T(loss / double(n));

  if (ag::tracked(logits)) {
    y.set_requires_grad(true);
    auto tgt = std::make_shared<Tensor<uint8_t>>(target);
    ag::Tape<T>::current()->push([b, hw, n, epsilon, tgt, ln = logits.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      ln->ensure_grad();
      const double gy = double(yn->grad[0]) / double(n);
      const T* x = ln->value.data();
      T* gx = ln->grad.data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t j = 0; j < hw; ++j) {
          const double x0 = double(x[(bi * 2 + 0) * hw + j]);
          const double x1 = double(x[(bi * 2 + 1) * hw + j]);
          const double m = std::max(x0, x1);
          const double e0 = std::exp(x0 - m), e1 = std::exp(x1 - m);
          const double p1 = e1 / (e0 + e1);
          const double q1 = (*tgt)[bi * hw + j] ? 1.0 - double(epsilon) : double(epsilon);
          gx[(bi * 2 + 0) * hw + j] += T(gy * ((1.0 - p1) - (1.0 - q1)));
          gx[(bi * 2 + 1) * hw + j] += T(gy * (p1 - q1));
        }
    });
  }
  return y;
}

/// l = dice_weight * Dice(softmax gas channel) + sce_weight * SoftCE(logits).
template <typename T>
ag::Var<T> combined_loss(const ag::Var<T>& logits, const Tensor<uint8_t>& target,
                         const LossConfig& config) {
  config.validate();
  auto probs = ag::select_channel(ag::softmax_channels(logits), 1);
  auto d = dice_loss(probs, target, T(config.dice_epsilon));
  auto s = soft_ce_loss(logits, target, T(config.label_smoothing));
  return ag::lincomb(T(config.dice_weight), d, T(config.sce_weight), s);
}

}  // namespace rtcan
