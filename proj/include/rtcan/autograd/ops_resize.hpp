// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "rtcan/autograd/variable.hpp"

namespace rtcan::ag {

namespace detail {
struct LerpIdx {
  int64_t i0, i1;
  double w1;  // weight of i1; weight of i0 is 1-w1
};

inline std::vector<LerpIdx> bilinear_axis(int64_t src, int64_t dst) {
  std::vector<LerpIdx> v(static_cast<size_t>(dst));
  const double scale = double(src) / double(dst);
  for (int64_t i = 0; i < dst; ++i) {
    double f = (double(i) + 0.5) * scale - 0.5;
    if (f < 0) f = 0;
    int64_t i0 = int64_t(f);
    if (i0 > src - 1) i0 = src - 1;
    int64_t i1 = i0 + 1 < src ? i0 + 1 : src - 1;
    v[size_t(i)] = {i0, i1, f - double(i0)};
  }
  return v;
}
}  // namespace detail

/// Bilinear resize of [B,C,H,W] to (oh, ow), half-pixel centers.
template <typename T>
Var<T> resize_bilinear(const Var<T>& x, int64_t oh, int64_t ow) {
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (oh == h && ow == w) {
    // still a distinct node so the graph stays acyclic
  }
  auto ys = detail::bilinear_axis(h, oh);
  auto xs = detail::bilinear_axis(w, ow);
  Var<T> y(Tensor<T>({b, c, oh, ow}));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t bc = 0; bc < b * c; ++bc) {
    const T* xp = xv + bc * h * w;
    T* yp = yv + bc * oh * ow;
    for (int64_t oy = 0; oy < oh; ++oy) {
      const auto& ry = ys[size_t(oy)];
      for (int64_t ox = 0; ox < ow; ++ox) {
        const auto& rx = xs[size_t(ox)];
        const double top = double(xp[ry.i0 * w + rx.i0]) * (1.0 - rx.w1) +
                           double(xp[ry.i0 * w + rx.i1]) * rx.w1;
        const double bot = double(xp[ry.i1 * w + rx.i0]) * (1.0 - rx.w1) +
                           double(xp[ry.i1 * w + rx.i1]) * rx.w1;
        yp[oy * ow + ox] = T(top * (1.0 - ry.w1) + bot * ry.w1);
      }
    }
  }
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push(
        [b, c, h, w, oh, ow, ys, xs, xn = x.node(), yn = y.node()] {
          if (yn->grad.empty()) return;
          xn->ensure_grad();
          const T* gy = yn->grad.data();
          T* gx = xn->grad.data();
          for (int64_t bc = 0; bc < b * c; ++bc) {
            const T* gp = gy + bc * oh * ow;
            T* dp = gx + bc * h * w;
            for (int64_t oy = 0; oy < oh; ++oy) {
              const auto& ry = ys[size_t(oy)];
              for (int64_t ox = 0; ox < ow; ++ox) {
                const auto& rx = xs[size_t(ox)];
                const double g = double(gp[oy * ow + ox]);
                dp[ry.i0 * w + rx.i0] += T(g * (1.0 - ry.w1) * (1.0 - rx.w1));
                dp[ry.i0 * w + rx.i1] += T(g * (1.0 - ry.w1) * rx.w1);
                dp[ry.i1 * w + rx.i0] += T(g * ry.w1 * (1.0 - rx.w1));
                dp[ry.i1 * w + rx.i1] += T(g * ry.w1 * rx.w1);
              }
            }
          }
        });
  }
  return y;
}

}  // namespace rtcan::ag
