// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "rtcan/autograd/variable.hpp"

namespace rtcan::ag {

/// Batch normalization over [B,C,H,W]. Training mode normalizes with batch
/// statistics and updates the running buffers in place; evaluation mode uses
/// the running buffers. gamma/beta are [C].
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  T momentum = T(0.1), T eps = T(1e-5)) {
  const int64_t b = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
  const int64_t n = b * hw;
  Var<T> y(Tensor<T>(x.shape()));
  const T* xv = x.value().data();
  const T* gv = gamma.value().data();
  const T* bv = beta.value().data();
  T* yv = y.value().data();

  auto mean = std::make_shared<std::vector<T>>(size_t(c));
  auto inv_std = std::make_shared<std::vector<T>>(size_t(c));

  if (training) {
    for (int64_t ci = 0; ci < c; ++ci) {
      double s = 0;
      for (int64_t bi = 0; bi < b; ++bi) {
        const T* xp = xv + (bi * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) s += double(xp[j]);
      }
      const double mu = s / double(n);
      double v = 0;
      for (int64_t bi = 0; bi < b; ++bi) {
        const T* xp = xv + (bi * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          const double d = double(xp[j]) - mu;
          v += d * d;
        }
      }
      const double var = v / double(n);
      (*mean)[size_t(ci)] = T(mu);
      (*inv_std)[size_t(ci)] = T(1.0 / std::sqrt(var + double(eps)));
      const double var_unbiased = n > 1 ? v / double(n - 1) : var;
      running_mean[ci] = T((1.0 - double(momentum)) * double(running_mean[ci]) + double(momentum) * mu);
      running_var[ci] =
          T((1.0 - double(momentum)) * double(running_var[ci]) + double(momentum) * var_unbiased);
    }
  } else {
    for (int64_t ci = 0; ci < c; ++ci) {
      (*mean)[size_t(ci)] = running_mean[ci];
      (*inv_std)[size_t(ci)] = T(1.0 / std::sqrt(double(running_var[ci]) + double(eps)));
    }
  }

  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t ci = 0; ci < c; ++ci) {
      const T mu = (*mean)[size_t(ci)];
      const T is = (*inv_std)[size_t(ci)];
      const T g = gv[ci], bb = bv[ci];
      const T* xp = xv + (bi * c + ci) * hw;
      T* yp = yv + (bi * c + ci) * hw;
      for (int64_t j = 0; j < hw; ++j) yp[j] = (xp[j] - mu) * is * g + bb;
    }

  const bool track =
      Tape<T>::recording() && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (track) {
    y.set_requires_grad(true);
    Tape<T>::current()->push([b, c, hw, n, training, mean, inv_std, xn = x.node(),
                              gn = gamma.node(), bn = beta.node(), yn = y.node()] {
      if (yn->grad.empty()) return;
      const T* gy = yn->grad.data();
      const T* xv = xn->value.data();
      const T* gv = gn->value.data();
      std::vector<double> dgamma(size_t(c), 0.0), dbeta(size_t(c), 0.0);
      for (int64_t ci = 0; ci < c; ++ci) {
        const double mu = double((*mean)[size_t(ci)]);
        const double is = double((*inv_std)[size_t(ci)]);
        double dg = 0, db = 0;
        for (int64_t bi = 0; bi < b; ++bi) {
          const T* xp = xv + (bi * c + ci) * hw;
          const T* gp = gy + (bi * c + ci) * hw;
          for (int64_t j = 0; j < hw; ++j) {
            db += double(gp[j]);
            dg += double(gp[j]) * (double(xp[j]) - mu) * is;
          }
        }
        dgamma[size_t(ci)] = dg;
        dbeta[size_t(ci)] = db;
      }
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (int64_t ci = 0; ci < c; ++ci) gn->grad[ci] += T(dgamma[size_t(ci)]);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t ci = 0; ci < c; ++ci) bn->grad[ci] += T(dbeta[size_t(ci)]);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        T* gx = xn->grad.data();
        for (int64_t ci = 0; ci < c; ++ci) {
          const double mu = double((*mean)[size_t(ci)]);
          const double is = double((*inv_std)[size_t(ci)]);
          const double g = double(gv[ci]);
          if (training) {
            const double dg_n = dgamma[size_t(ci)] / double(n);
            const double db_n = dbeta[size_t(ci)] / double(n);
            for (int64_t bi = 0; bi < b; ++bi) {
              const T* xp = xv + (bi * c + ci) * hw;
              const T* gp = gy + (bi * c + ci) * hw;
              T* dp = gx + (bi * c + ci) * hw;
              for (int64_t j = 0; j < hw; ++j) {
                const double xhat = (double(xp[j]) - mu) * is;
                dp[j] += T(g * is * (double(gp[j]) - xhat * dg_n - db_n));
              }
            }
          } else {
            const double scale = g * is;
            for (int64_t bi = 0; bi < b; ++bi) {
              const T* gp = gy + (bi * c + ci) * hw;
              T* dp = gx + (bi * c + ci) * hw;
              for (int64_t j = 0; j < hw; ++j) dp[j] += T(scale * double(gp[j]));
            }
          }
        }
      }
    });
  }
  return y;
}

}  // namespace rtcan::ag
