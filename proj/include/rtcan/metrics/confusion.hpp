// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "rtcan/core/errors.hpp"
#include "rtcan/core/tensor.hpp"

namespace rtcan {

/// Pixel confusion counters; gas is the positive class.
struct ConfusionCounts {
  uint64_t tp = 0;
  uint64_t tn = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;

  uint64_t total() const { return tp + tn + fp + fn; }
};

/// Accumulates exact pixel counts from a prediction/ground-truth mask pair.
inline ConfusionCounts& update(ConfusionCounts& counts, const Tensor<uint8_t>& pred,
                               const Tensor<uint8_t>& gt) {
  if (pred.shape() != gt.shape())
    throw ShapeError("metrics update: mask shape mismatch " + shape_str(pred.shape()) + " vs " +
                     shape_str(gt.shape()));
  uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  const uint8_t* p = pred.data();
  const uint8_t* g = gt.data();
  for (int64_t i = 0, n = pred.numel(); i < n; ++i) {
    if (p[i] > 1 || g[i] > 1) throw ValueError("metrics update: masks must be binary");
    if (p[i]) {
      if (g[i])
        ++tp;
      else
        ++fp;
    } else {
      if (g[i])
        ++fn;
      else
        ++tn;
    }
  }
  counts.tp += tp;
  counts.tn += tn;
  counts.fp += fp;
  counts.fn += fn;
  return counts;
}

/// Componentwise sum; commutative and associative.
inline ConfusionCounts merge(const ConfusionCounts& a, const ConfusionCounts& b) {
  const uint64_t lim = std::numeric_limits<uint64_t>::max();
  auto add = [lim](uint64_t x, uint64_t y) {
    if (x > lim - y) throw ValueError("confusion counter overflow");
    return x + y;
  };
  return ConfusionCounts{add(a.tp, b.tp), add(a.tn, b.tn), add(a.fp, b.fp), add(a.fn, b.fn)};
}

struct MetricsReport {
  double accuracy = 0;
  double iou = 0;
  double f2 = 0;
  double precision = 0;
  double recall = 0;
  double beta = 2.0;
  std::string conventions;
};

inline constexpr const char* kMetricConventions =
    "empty union (TP+FP+FN=0) scores IoU=F2=precision=recall=1; "
    "ratios with TP=0 and a nonzero denominator score 0";

/// Acc, IoU and F-beta from global counts.
///   Acc = (TP+TN)/total, IoU = TP/(TP+FP+FN),
///   Fb = (1+b^2)*P*R / (b^2*P + R) with P = TP/(TP+FP), R = TP/(TP+FN).
inline MetricsReport compute(const ConfusionCounts& c, double beta = 2.0) {
  if (c.total() == 0) throw ValueError("metrics compute: no pixels accumulated");
  if (beta <= 0) throw ValueError("metrics compute: beta must be positive");
  MetricsReport r;
  r.beta = beta;
  r.conventions = kMetricConventions;
  r.accuracy = double(c.tp + c.tn) / double(c.total());
  const bool empty_union = (c.tp + c.fp + c.fn) == 0;
  if (empty_union) {
    r.iou = r.f2 = r.precision = r.recall = 1.0;
    return r;
  }
  r.iou = double(c.tp) / double(c.tp + c.fp + c.fn);
  r.precision = (c.tp + c.fp) == 0 ? 1.0 : double(c.tp) / double(c.tp + c.fp);
  r.recall = (c.tp + c.fn) == 0 ? 1.0 : double(c.tp) / double(c.tp + c.fn);
  const double b2 = beta * beta;
  const double den = b2 * r.precision + r.recall;
  r.f2 = den == 0.0 ? 0.0 : (1.0 + b2) * r.precision * r.recall / den;
  return r;
}

/// Table-style percentage: x100, rounded to 4 decimals.
inline double as_percent(double v) { return std::round(v * 100.0 * 1e4) / 1e4; }

inline nlohmann::json metrics_report_json(const MetricsReport& r) {
  return nlohmann::json{{"accuracy", as_percent(r.accuracy)}, {"iou", as_percent(r.iou)},
                        {"f2", as_percent(r.f2)},             {"precision", as_percent(r.precision)},
                        {"recall", as_percent(r.recall)},     {"beta", r.beta},
                        {"conventions", r.conventions}};
}

inline MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.accuracy = j.at("accuracy").get<double>() / 100.0;
  r.iou = j.at("iou").get<double>() / 100.0;
  r.f2 = j.at("f2").get<double>() / 100.0;
  r.precision = j.at("precision").get<double>() / 100.0;
  r.recall = j.at("recall").get<double>() / 100.0;
  r.beta = j.at("beta").get<double>();
  r.conventions = j.value("conventions", "");
  return r;
}

}  // namespace rtcan
