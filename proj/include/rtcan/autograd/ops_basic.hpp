// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "rtcan/autograd/variable.hpp"

namespace rtcan::ag {

namespace detail {
template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (int64_t i = 0, n = dst.numel(); i < n; ++i) d[i] += s[i];
}
}  // namespace detail

template <typename T>
Var<T> relu(const Var<T>& x) {
  Var<T> y(Tensor<T>(x.shape()));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0, n = x.numel(); i < n; ++i) yv[i] = xv[i] > T(0) ? xv[i] : T(0);
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* xv = xn->value.data();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t i = 0, n = xn->value.numel(); i < n; ++i)
        if (xv[i] > T(0)) gx[i] += gy[i];
    });
  }
  return y;
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Var<T> y(Tensor<T>(x.shape()));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0, n = x.numel(); i < n; ++i) yv[i] = T(1) / (T(1) + std::exp(-xv[i]));
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* yv = yn->value.data();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t i = 0, n = yn->value.numel(); i < n; ++i)
        gx[i] += gy[i] * yv[i] * (T(1) - yv[i]);
    });
  }
  return y;
}

/// y = alpha * a + beta * b (same shapes).
template <typename T>
Var<T> lincomb(T alpha, const Var<T>& a, T beta, const Var<T>& b) {
  check_same_shape(a.value(), b.value(), "lincomb");
  Var<T> y(Tensor<T>(a.shape()));
  const T* av = a.value().data();
  const T* bv = b.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0, n = a.numel(); i < n; ++i) yv[i] = alpha * av[i] + beta * bv[i];
  if (tracked(a, b)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([alpha, beta, an = a.node(), bn = b.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      const int64_t n = yn->value.numel();
      if (an->requires_grad) {
        an->ensure_grad();
        T* ga = an->grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += alpha * gy[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        T* gb = bn->grad.data();
        for (int64_t i = 0; i < n; ++i) gb[i] += beta * gy[i];
      }
    });
  }
  return y;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return lincomb(T(1), a, T(1), b);
}

/// Elementwise product (same shapes).
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.value(), b.value(), "mul");
  Var<T> y(Tensor<T>(a.shape()));
  const T* av = a.value().data();
  const T* bv = b.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0, n = a.numel(); i < n; ++i) yv[i] = av[i] * bv[i];
  if (tracked(a, b)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([an = a.node(), bn = b.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      const int64_t n = yn->value.numel();
      if (an->requires_grad) {
        an->ensure_grad();
        const T* bv = bn->value.data();
        T* ga = an->grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += gy[i] * bv[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        const T* av = an->value.data();
        T* gb = bn->grad.data();
        for (int64_t i = 0; i < n; ++i) gb[i] += gy[i] * av[i];
      }
    });
  }
  return y;
}

/// x [B,C,H,W] * gate [B,C,1,1], broadcast over spatial positions.
template <typename T>
Var<T> mul_channel(const Var<T>& x, const Var<T>& g) {
  const int64_t b = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
  if (g.size(0) != b || g.size(1) != c || g.numel() != b * c)
    throw ShapeError("mul_channel gate must be [B,C,1,1]");
  Var<T> y(Tensor<T>(x.shape()));
  const T* xv = x.value().data();
  const T* gv = g.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0; i < b * c; ++i) {
    const T s = gv[i];
    const T* xp = xv + i * hw;
    T* yp = yv + i * hw;
    for (int64_t j = 0; j < hw; ++j) yp[j] = xp[j] * s;
  }
  if (tracked(x, g)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, xn = x.node(), gn = g.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      if (xn->requires_grad) {
        xn->ensure_grad();
        const T* gv = gn->value.data();
        T* gx = xn->grad.data();
        for (int64_t i = 0; i < b * c; ++i) {
          const T s = gv[i];
          for (int64_t j = 0; j < hw; ++j) gx[i * hw + j] += gy[i * hw + j] * s;
        }
      }
      if (gn->requires_grad) {
        gn->ensure_grad();
        const T* xv = xn->value.data();
        T* gg = gn->grad.data();
        for (int64_t i = 0; i < b * c; ++i) {
          T s = T(0);
          for (int64_t j = 0; j < hw; ++j) s += gy[i * hw + j] * xv[i * hw + j];
          gg[i] += s;
        }
      }
    });
  }
  return y;
}

/// x [B,C,H,W] * gate [B,1,H,W], broadcast over channels.
template <typename T>
Var<T> mul_spatial(const Var<T>& x, const Var<T>& g) {
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (g.size(0) != b || g.size(1) != 1 || g.size(2) != h || g.size(3) != w)
    throw ShapeError("mul_spatial gate must be [B,1,H,W]");
  const int64_t hw = h * w;
  Var<T> y(Tensor<T>(x.shape()));
  const T* xv = x.value().data();
  const T* gv = g.value().data();
  T* yv = y.value().data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t ci = 0; ci < c; ++ci) {
      const T* xp = xv + (bi * c + ci) * hw;
      const T* gp = gv + bi * hw;
      T* yp = yv + (bi * c + ci) * hw;
      for (int64_t j = 0; j < hw; ++j) yp[j] = xp[j] * gp[j];
    }
  if (tracked(x, g)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, xn = x.node(), gn = g.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      if (xn->requires_grad) {
        xn->ensure_grad();
        const T* gv = gn->value.data();
        T* gx = xn->grad.data();
        for (int64_t bi = 0; bi < b; ++bi)
          for (int64_t ci = 0; ci < c; ++ci) {
            const int64_t off = (bi * c + ci) * hw;
            for (int64_t j = 0; j < hw; ++j) gx[off + j] += gy[off + j] * gv[bi * hw + j];
          }
      }
      if (gn->requires_grad) {
        gn->ensure_grad();
        const T* xv = xn->value.data();
        T* gg = gn->grad.data();
        for (int64_t bi = 0; bi < b; ++bi)
          for (int64_t ci = 0; ci < c; ++ci) {
            const int64_t off = (bi * c + ci) * hw;
            for (int64_t j = 0; j < hw; ++j) gg[bi * hw + j] += gy[off + j] * xv[off + j];
          }
      }
    });
  }
  return y;
}

/// Concatenates [B,Ci,H,W] inputs along the channel axis.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels: empty input list");
  const int64_t b = xs[0].size(0), h = xs[0].size(2), w = xs[0].size(3);
  int64_t ctot = 0;
  for (const auto& x : xs) {
    if (x.size(0) != b || x.size(2) != h || x.size(3) != w)
      throw ShapeError("concat_channels: incompatible shapes");
    ctot += x.size(1);
  }
  const int64_t hw = h * w;
  Var<T> y(Tensor<T>({b, ctot, h, w}));
  T* yv = y.value().data();
  int64_t coff = 0;
  for (const auto& x : xs) {
    const int64_t c = x.size(1);
    const T* xv = x.value().data();
    for (int64_t bi = 0; bi < b; ++bi)
      std::copy(xv + bi * c * hw, xv + (bi + 1) * c * hw, yv + (bi * ctot + coff) * hw);
    coff += c;
  }
  bool track = Tape<T>::recording();
  bool any = false;
  if (track)
    for (const auto& x : xs) any = any || x.requires_grad();
  if (track && any) {
    y.set_requires_grad(true);
    std::vector<std::shared_ptr<VarImpl<T>>> nodes;
    nodes.reserve(xs.size());
    for (const auto& x : xs) nodes.push_back(x.node());
    Tape<T>::current()->push([b, ctot, hw, nodes, yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      int64_t coff = 0;
      for (const auto& xn : nodes) {
        const int64_t c = xn->value.size(1);
        if (xn->requires_grad) {
          xn->ensure_grad();
          T* gx = xn->grad.data();
          for (int64_t bi = 0; bi < b; ++bi) {
            const T* src = gy + (bi * ctot + coff) * hw;
            T* dst = gx + bi * c * hw;
            for (int64_t j = 0; j < c * hw; ++j) dst[j] += src[j];
          }
        }
        coff += c;
      }
    });
  }
  return y;
}

/// Extracts channel `ch` of [B,C,H,W] as [B,H,W].
template <typename T>
Var<T> select_channel(const Var<T>& x, int64_t ch) {
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (ch < 0 || ch >= c) throw ShapeError("select_channel: channel out of range");
  const int64_t hw = h * w;
  Var<T> y(Tensor<T>({b, h, w}));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t bi = 0; bi < b; ++bi)
    std::copy(xv + (bi * c + ch) * hw, xv + (bi * c + ch + 1) * hw, yv + bi * hw);
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, ch, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t j = 0; j < hw; ++j) gx[(bi * c + ch) * hw + j] += gy[bi * hw + j];
    });
  }
  return y;
}

template <typename T>
Var<T> mean_all(const Var<T>& x) {
  const int64_t n = x.numel();
  Var<T> y(Tensor<T>({1}));
  double s = 0;
  const T* xv = x.value().data();
  for (int64_t i = 0; i < n; ++i) s += double(xv[i]);
  y.value()[0] = T(s / double(n));
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([n, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T g = yn->grad[0] / T(n);
      T* gx = xn->grad.data();
      for (int64_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return y;
}

template <typename T>
Var<T> sum_all(const Var<T>& x) {
  const int64_t n = x.numel();
  Var<T> y(Tensor<T>({1}));
  double s = 0;
  const T* xv = x.value().data();
  for (int64_t i = 0; i < n; ++i) s += double(xv[i]);
  y.value()[0] = T(s);
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([n, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T g = yn->grad[0];
      T* gx = xn->grad.data();
      for (int64_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return y;
}

/// Global average pool [B,C,H,W] -> [B,C,1,1].
template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  const int64_t b = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
  Var<T> y(Tensor<T>({b, c, 1, 1}));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0; i < b * c; ++i) {
    double s = 0;
    for (int64_t j = 0; j < hw; ++j) s += double(xv[i * hw + j]);
    yv[i] = T(s / double(hw));
  }
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t i = 0; i < b * c; ++i) {
        const T g = gy[i] / T(hw);
        for (int64_t j = 0; j < hw; ++j) gx[i * hw + j] += g;
      }
    });
  }
  return y;
}

/// Broadcast [B,C,1,1] -> [B,C,H,W].
template <typename T>
Var<T> broadcast_hw(const Var<T>& x, int64_t h, int64_t w) {
  const int64_t b = x.size(0), c = x.size(1);
  if (x.numel() != b * c) throw ShapeError("broadcast_hw expects [B,C,1,1]");
  const int64_t hw = h * w;
  Var<T> y(Tensor<T>({b, c, h, w}));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t i = 0; i < b * c; ++i) std::fill(yv + i * hw, yv + (i + 1) * hw, xv[i]);
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t i = 0; i < b * c; ++i) {
        T s = T(0);
        for (int64_t j = 0; j < hw; ++j) s += gy[i * hw + j];
        gx[i] += s;
      }
    });
  }
  return y;
}

/// Per-position mean over channels: [B,C,H,W] -> [B,1,H,W].
template <typename T>
Var<T> channel_mean_map(const Var<T>& x) {
  const int64_t b = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
  Var<T> y(Tensor<T>({b, int64_t(1), x.size(2), x.size(3)}));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t j = 0; j < hw; ++j) {
      double s = 0;
      for (int64_t ci = 0; ci < c; ++ci) s += double(xv[(bi * c + ci) * hw + j]);
      yv[bi * hw + j] = T(s / double(c));
    }
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t j = 0; j < hw; ++j) {
          const T g = gy[bi * hw + j] / T(c);
          for (int64_t ci = 0; ci < c; ++ci) gx[(bi * c + ci) * hw + j] += g;
        }
    });
  }
  return y;
}

/// Per-position max over channels: [B,C,H,W] -> [B,1,H,W]. First max wins.
template <typename T>
Var<T> channel_max_map(const Var<T>& x) {
  const int64_t b = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
  Var<T> y(Tensor<T>({b, int64_t(1), x.size(2), x.size(3)}));
  auto argmax = std::make_shared<std::vector<int32_t>>(size_t(b * hw));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t j = 0; j < hw; ++j) {
      T best = xv[(bi * c + 0) * hw + j];
      int32_t bc = 0;
      for (int64_t ci = 1; ci < c; ++ci) {
        const T v = xv[(bi * c + ci) * hw + j];
        if (v > best) {
          best = v;
          bc = int32_t(ci);
        }
      }
      yv[bi * hw + j] = best;
      (*argmax)[size_t(bi * hw + j)] = bc;
    }
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, argmax, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t j = 0; j < hw; ++j) {
          const int64_t ci = (*argmax)[size_t(bi * hw + j)];
          gx[(bi * c + ci) * hw + j] += gy[bi * hw + j];
        }
    });
  }
  return y;
}

/// Softmax over the channel axis of [B,C,H,W].
template <typename T>
Var<T> softmax_channels(const Var<T>& x) {
  const int64_t b = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
  Var<T> y(Tensor<T>(x.shape()));
  const T* xv = x.value().data();
  T* yv = y.value().data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t j = 0; j < hw; ++j) {
      T m = xv[(bi * c) * hw + j];
      for (int64_t ci = 1; ci < c; ++ci) m = std::max(m, xv[(bi * c + ci) * hw + j]);
      T z = T(0);
      for (int64_t ci = 0; ci < c; ++ci) {
        const T e = std::exp(xv[(bi * c + ci) * hw + j] - m);
        yv[(bi * c + ci) * hw + j] = e;
        z += e;
      }
      for (int64_t ci = 0; ci < c; ++ci) yv[(bi * c + ci) * hw + j] /= z;
    }
  if (tracked(x)) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, xn = x.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      xn->ensure_grad();
      const T* yv = yn->value.data();
      const T* gy = yn->grad.data();
      T* gx = xn->grad.data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t j = 0; j < hw; ++j) {
          T dot = T(0);
          for (int64_t ci = 0; ci < c; ++ci)
            dot += gy[(bi * c + ci) * hw + j] * yv[(bi * c + ci) * hw + j];
          for (int64_t ci = 0; ci < c; ++ci) {
            const int64_t k = (bi * c + ci) * hw + j;
            gx[k] += yv[k] * (gy[k] - dot);
          }
        }
    });
  }
  return y;
}

}  // namespace rtcan::ag
