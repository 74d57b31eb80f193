// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rtcan/core/errors.hpp"
#include "rtcan/core/tensor.hpp"

namespace rtcan {

/// 8-bit image, HWC interleaved, c = 1 (gray) or 3 (rgb).
struct ImageU8 {
  int h = 0;
  int w = 0;
  int c = 1;
  std::vector<uint8_t> data;

  ImageU8() = default;
  ImageU8(int h_, int w_, int c_, uint8_t fill = 0)
      : h(h_), w(w_), c(c_), data(size_t(h_) * size_t(w_) * size_t(c_), fill) {}

  uint8_t& at(int y, int x, int ch = 0) { return data[size_t((y * w + x) * c + ch)]; }
  uint8_t at(int y, int x, int ch = 0) const { return data[size_t((y * w + x) * c + ch)]; }
  size_t size() const { return data.size(); }

  bool operator==(const ImageU8& o) const {
    return h == o.h && w == o.w && c == o.c && data == o.data;
  }
};

inline uint8_t quantize_u8(double v) {
  double q = std::round(v * 255.0);
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return uint8_t(q);
}

/// [C,H,W] float tensor in [0,1] from an interleaved 8-bit image.
inline Tensor<float> to_chw(const ImageU8& img) {
  Tensor<float> t({img.c, img.h, img.w});
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) t.at3(ch, y, x) = float(img.at(y, x, ch)) / 255.0f;
  return t;
}

inline ImageU8 from_plane(const Tensor<float>& plane) {
  if (plane.dim() != 2) throw ShapeError("from_plane expects [H,W], got " + shape_str(plane.shape()));
  ImageU8 img(int(plane.size(0)), int(plane.size(1)), 1);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) img.at(y, x) = quantize_u8(double(plane.at2(y, x)));
  return img;
}

inline ImageU8 flip_horizontal(const ImageU8& img) {
  ImageU8 out(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(y, img.w - 1 - x, ch);
  return out;
}

/// Bilinear plane resize, half-pixel centers (align_corners = false).
inline void resize_bilinear_plane(const float* src, int sh, int sw, float* dst, int dh, int dw) {
  const double sy = double(sh) / double(dh);
  const double sx = double(sw) / double(dw);
  for (int y = 0; y < dh; ++y) {
    double fy = (double(y) + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    int y0 = int(fy);
    if (y0 > sh - 1) y0 = sh - 1;
    int y1 = y0 + 1 < sh ? y0 + 1 : sh - 1;
    const double wy = fy - double(y0);
    for (int x = 0; x < dw; ++x) {
      double fx = (double(x) + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      int x0 = int(fx);
      if (x0 > sw - 1) x0 = sw - 1;
      int x1 = x0 + 1 < sw ? x0 + 1 : sw - 1;
      const double wx = fx - double(x0);
      const double top = double(src[y0 * sw + x0]) * (1.0 - wx) + double(src[y0 * sw + x1]) * wx;
      const double bot = double(src[y1 * sw + x0]) * (1.0 - wx) + double(src[y1 * sw + x1]) * wx;
      dst[y * dw + x] = float(top * (1.0 - wy) + bot * wy);
    }
  }
}

/// Nearest-neighbor plane resize (used for masks).
template <typename T>
void resize_nearest_plane(const T* src, int sh, int sw, T* dst, int dh, int dw) {
  const double sy = double(sh) / double(dh);
  const double sx = double(sw) / double(dw);
  for (int y = 0; y < dh; ++y) {
    int ys = int((double(y) + 0.5) * sy);
    if (ys > sh - 1) ys = sh - 1;
    for (int x = 0; x < dw; ++x) {
      int xs = int((double(x) + 0.5) * sx);
      if (xs > sw - 1) xs = sw - 1;
      dst[y * dw + x] = src[ys * sw + xs];
    }
  }
}

/// Resize a [C,H,W] tensor bilinearly to (dh, dw).
inline Tensor<float> resize_bilinear_chw(const Tensor<float>& src, int dh, int dw) {
  if (src.dim() != 3) throw ShapeError("resize_bilinear_chw expects [C,H,W]");
  const int c = int(src.size(0)), sh = int(src.size(1)), sw = int(src.size(2));
  Tensor<float> dst({c, dh, dw});
  for (int ch = 0; ch < c; ++ch)
    resize_bilinear_plane(src.data() + size_t(ch) * sh * sw, sh, sw,
                          dst.data() + size_t(ch) * dh * dw, dh, dw);
  return dst;
}

inline Tensor<float> flip_horizontal_chw(const Tensor<float>& src) {
  const int c = int(src.size(0)), h = int(src.size(1)), w = int(src.size(2));
  Tensor<float> out({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at3(ch, y, x) = src.at3(ch, y, w - 1 - x);
  return out;
}

/// Reflection-pad a [C,H,W] tensor on the bottom/right up to (dh, dw).
inline Tensor<float> pad_reflect_chw(const Tensor<float>& src, int dh, int dw) {
  const int c = int(src.size(0)), h = int(src.size(1)), w = int(src.size(2));
  if (dh < h || dw < w) throw ShapeError("pad_reflect_chw target smaller than source");
  if (dh >= 2 * h || dw >= 2 * w)
    throw ShapeError("pad_reflect_chw padding exceeds source extent");
  Tensor<float> out({c, dh, dw});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < dh; ++y) {
      const int ys = y < h ? y : 2 * h - 2 - y;
      for (int x = 0; x < dw; ++x) {
        const int xs = x < w ? x : 2 * w - 2 - x;
        out.at3(ch, y, x) = src.at3(ch, ys, xs);
      }
    }
  return out;
}

}  // namespace rtcan
