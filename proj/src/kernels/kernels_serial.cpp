// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cassert>

#include "relrot/kernels.hpp"

namespace relrot::kernels::serial {

void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  assert(x.size() == g.in_size() && y.size() == g.out_size() && w.size() == g.weight_size());
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n) {
    for (int oc = 0; oc < g.out_c; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (int ic = 0; ic < g.in_c; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += w[((std::size_t(oc) * g.in_c + ic) * k + ky) * k + kx] *
                       x[((std::size_t(n) * g.in_c + ic) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
          y[((std::size_t(n) * g.out_c + oc) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
  for (int n = 0; n < g.batch; ++n) {
    for (int oc = 0; oc < g.out_c; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double go = dy[((std::size_t(n) * g.out_c + oc) * oh + oy) * ow + ox];
          if (!db.empty()) db[oc] += go;
          for (int ic = 0; ic < g.in_c; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                const std::size_t wi = ((std::size_t(oc) * g.in_c + ic) * k + ky) * k + kx;
                const std::size_t xi = ((std::size_t(n) * g.in_c + ic) * g.in_h + iy) * g.in_w + ix;
                if (!dw.empty()) dw[wi] += go * x[xi];
                if (!dx.empty()) dx[xi] += go * w[wi];
              }
            }
          }
        }
      }
    }
  }
}

void correlate(const CorrGeometry& g, std::span<const double> f1, std::span<const double> f2,
               std::span<double> vol) {
  const std::size_t n = g.positions, kc = g.channels;
  for (int b = 0; b < g.batch; ++b) {
    const double* a = f1.data() + b * kc * n;
    const double* c = f2.data() + b * kc * n;
    double* v = vol.data() + b * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kc; ++k) acc += a[k * n + i] * c[k * n + j];
        v[i * n + j] = acc;
      }
    }
  }
}

void correlate_backward(const CorrGeometry& g, std::span<const double> f1,
                        std::span<const double> f2, std::span<const double> dvol,
                        std::span<double> df1, std::span<double> df2) {
  const std::size_t n = g.positions, kc = g.channels;
  for (int b = 0; b < g.batch; ++b) {
    const double* a = f1.data() + b * kc * n;
    const double* c = f2.data() + b * kc * n;
    const double* dv = dvol.data() + b * n * n;
    double* da = df1.data() + b * kc * n;
    double* dc = df2.data() + b * kc * n;
    for (std::size_t k = 0; k < kc; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc1 = 0.0, acc2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          acc1 += dv[i * n + j] * c[k * n + j];
          acc2 += dv[j * n + i] * a[k * n + j];
        }
        da[k * n + i] = acc1;
        dc[k * n + i] = acc2;
      }
    }
  }
}

}  // namespace relrot::kernels::serial
