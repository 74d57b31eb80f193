// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "rtcan/autograd/variable.hpp"
#include "rtcan/core/blas.hpp"

namespace rtcan::ag {

namespace detail {

/// Unrolls one [C,H,W] sample into columns [C*kh*kw, OH*OW] with zero padding.
template <typename T>
void im2col(const T* x, int64_t c, int64_t h, int64_t w, int kh, int kw, int stride, int pad,
            int64_t oh, int64_t ow, T* col) {
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        T* dst = col + ((ci * kh + ki) * kw + kj) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) {
            for (int64_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = T(0);
            continue;
          }
          const T* src = x + (ci * h + iy) * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kj;
            dst[oy * ow + ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

/// Scatter-add of column gradients back into a [C,H,W] sample gradient.
template <typename T>
void col2im_add(const T* col, int64_t c, int64_t h, int64_t w, int kh, int kw, int stride,
                int pad, int64_t oh, int64_t ow, T* dx) {
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const T* src = col + ((ci * kh + ki) * kw + kj) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          T* dst = dx + (ci * h + iy) * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < w) dst[ix] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2D convolution, NCHW, weight [Cout,Cin,kh,kw], optional bias [Cout].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>* bias, int stride, int pad) {
  if (x.value().dim() != 4 || w.value().dim() != 4)
    throw ShapeError("conv2d expects 4D input and weight");
  const int64_t b = x.size(0), cin = x.size(1), h = x.size(2), wd = x.size(3);
  const int64_t cout = w.size(0);
  const int kh = int(w.size(2)), kw = int(w.size(3));
  if (w.size(1) != cin)
    throw ShapeError("conv2d: weight expects " + std::to_string(w.size(1)) +
                     " input channels, got " + std::to_string(cin));
  const int64_t oh = (h + 2 * pad - kh) / stride + 1;
  const int64_t ow = (wd + 2 * pad - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: output would be empty");
  const int64_t k = cin * kh * kw;
  const int64_t p = oh * ow;

  Var<T> y(Tensor<T>({b, cout, oh, ow}));
  {
    std::vector<T> col(size_t(k * p));
    const T* xv = x.value().data();
    const T* wv = w.value().data();
    T* yv = y.value().data();
    for (int64_t bi = 0; bi < b; ++bi) {
      detail::im2col(xv + bi * cin * h * wd, cin, h, wd, kh, kw, stride, pad, oh, ow, col.data());
      gemm<T>(false, false, int(cout), int(p), int(k), T(1), wv, int(k), col.data(), int(p), T(0),
              yv + bi * cout * p, int(p));
    }
    if (bias) {
      const T* bv = bias->value().data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t co = 0; co < cout; ++co) {
          T* yp = yv + (bi * cout + co) * p;
          const T bb = bv[co];
          for (int64_t j = 0; j < p; ++j) yp[j] += bb;
        }
    }
  }

  const bool track = Tape<T>::recording() &&
                     (x.requires_grad() || w.requires_grad() || (bias && bias->requires_grad()));
  if (track) {
    y.set_requires_grad(true);
    auto bias_node = bias ? bias->node() : std::shared_ptr<VarImpl<T>>();
    Tape<T>::current()->push([b, cin, h, wd, cout, kh, kw, stride, pad, oh, ow, k, p,
                              xn = x.node(), wn = w.node(), bias_node, yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      const T* xv = xn->value.data();
      const T* wv = wn->value.data();
      std::vector<T> col(size_t(k * p));
      if (wn->requires_grad) {
        wn->ensure_grad();
        T* gw = wn->grad.data();
        for (int64_t bi = 0; bi < b; ++bi) {
          detail::im2col(xv + bi * cin * h * wd, cin, h, wd, kh, kw, stride, pad, oh, ow,
                         col.data());
          // dW += dY[cout,p] * col^T[p,k]
          gemm<T>(false, true, int(cout), int(k), int(p), T(1), gy + bi * cout * p, int(p),
                  col.data(), int(p), T(1), gw, int(k));
        }
      }
      if (bias_node && bias_node->requires_grad) {
        bias_node->ensure_grad();
        T* gb = bias_node->grad.data();
        for (int64_t bi = 0; bi < b; ++bi)
          for (int64_t co = 0; co < cout; ++co) {
            const T* gp = gy + (bi * cout + co) * p;
            T s = T(0);
            for (int64_t j = 0; j < p; ++j) s += gp[j];
            gb[co] += s;
          }
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        T* gx = xn->grad.data();
        for (int64_t bi = 0; bi < b; ++bi) {
          // dcol[k,p] = W^T[k,cout] * dY[cout,p]
          gemm<T>(true, false, int(k), int(p), int(cout), T(1), wv, int(k), gy + bi * cout * p,
                  int(p), T(0), col.data(), int(p));
          detail::col2im_add(col.data(), cin, h, wd, kh, kw, stride, pad, oh, ow,
                             gx + bi * cin * h * wd);
        }
      }
    });
  }
  return y;
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, int stride, int pad) {
  return conv2d(x, w, &bias, stride, pad);
}

/// Max pooling with zero-free padding semantics (padded cells never win).
template <typename T>
Var<T> max_pool2d(const Var<T>& x, int k, int stride, int pad) {
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  const int64_t oh = (h + 2 * pad - k) / stride + 1;
  const int64_t ow = (w + 2 * pad - k) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("max_pool2d: output would be empty");
  Var<T> y(Tensor<T>({b, c, oh, ow}));
  auto argmax = std::make_shared<std::vector<int64_t>>(size_t(b * c * oh * ow));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t bc = 0; bc < b * c; ++bc) {
    const T* xp = xv + bc * h * w;
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        int64_t bidx = -1;
        for (int ki = 0; ki < k; ++ki) {
          const int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int kj = 0; kj < k; ++kj) {
            const int64_t ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            const T v = xp[iy * w + ix];
            if (v > best) {
              best = v;
              bidx = iy * w + ix;
            }
          }
        }
        yv[(bc * oh + oy) * ow + ox] = best;
        (*argmax)[size_t((bc * oh + oy) * ow + ox)] = bidx;
      }
  }
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, h, w, oh, ow, argmax, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t bc = 0; bc < b * c; ++bc)
        for (int64_t j = 0; j < oh * ow; ++j) {
          const int64_t idx = (*argmax)[size_t(bc * oh * ow + j)];
          if (idx >= 0) gx[bc * h * w + idx] += gy[bc * oh * ow + j];
        }
    });
  }
  return y;
}

}  // namespace rtcan::ag
