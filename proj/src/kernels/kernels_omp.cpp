// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "relrot/kernels.hpp"

namespace relrot::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

// cols[(c*k + ky)*k + kx][oy*ow + ox] = x[c][oy*s - p + ky][ox*s - p + kx]
void im2col(const ConvGeometry& g, const double* x, double* cols) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  const std::size_t plane = std::size_t(oh) * ow;
  for (int c = 0; c < g.in_c; ++c) {
    const double* xc = x + std::size_t(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + (std::size_t(c * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* out = row + std::size_t(oy) * ow;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(out, out + ow, 0.0);
            continue;
          }
          const double* xr = xc + std::size_t(iy) * g.in_w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            out[ox] = (ix < 0 || ix >= g.in_w) ? 0.0 : xr[ix];
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const double* cols, double* dx) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  const std::size_t plane = std::size_t(oh) * ow;
  std::fill(dx, dx + std::size_t(g.in_c) * g.in_h * g.in_w, 0.0);
  for (int c = 0; c < g.in_c; ++c) {
    double* xc = dx + std::size_t(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + (std::size_t(c * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          double* xr = xc + std::size_t(iy) * g.in_w;
          const double* in = row + std::size_t(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) xr[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  const int ckk = g.in_c * g.kernel * g.kernel;
  const int plane = g.out_h() * g.out_w();
  const std::size_t in_stride = std::size_t(g.in_c) * g.in_h * g.in_w;
  const ConstMapMat wm(w.data(), g.out_c, ckk);
  const bool pointwise = is_pointwise(g);

#pragma omp parallel
  {
    std::vector<double> cols(pointwise ? 0 : std::size_t(ckk) * plane);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      const double* xn = x.data() + n * in_stride;
      if (!pointwise) im2col(g, xn, cols.data());
      const ConstMapMat cm(pointwise ? xn : cols.data(), ckk, plane);
      MapMat ym(y.data() + std::size_t(n) * g.out_c * plane, g.out_c, plane);
      ym.noalias() = wm * cm;
      if (!bias.empty()) {
        for (int oc = 0; oc < g.out_c; ++oc) ym.row(oc).array() += bias[oc];
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
  const int ckk = g.in_c * g.kernel * g.kernel;
  const int plane = g.out_h() * g.out_w();
  const std::size_t in_stride = std::size_t(g.in_c) * g.in_h * g.in_w;
  const ConstMapMat wm(w.data(), g.out_c, ckk);
  const bool pointwise = is_pointwise(g);
  const int nthreads = max_threads();

  // Per-thread weight-gradient partials, reduced in thread order afterwards so
  // results depend only on the thread count.
  std::vector<RowMat> dw_part(nthreads);
  std::vector<Eigen::VectorXd> db_part(nthreads);

#pragma omp parallel
  {
    const int tid = thread_id();
    RowMat& dwl = dw_part[tid];
    Eigen::VectorXd& dbl = db_part[tid];
    if (!dw.empty()) dwl = RowMat::Zero(g.out_c, ckk);
    if (!db.empty()) dbl = Eigen::VectorXd::Zero(g.out_c);
    std::vector<double> cols(pointwise ? 0 : std::size_t(ckk) * plane);
    RowMat dcols;
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      const double* xn = x.data() + n * in_stride;
      const ConstMapMat dym(dy.data() + std::size_t(n) * g.out_c * plane, g.out_c, plane);
      if (!dw.empty()) {
        if (!pointwise) im2col(g, xn, cols.data());
        const ConstMapMat cm(pointwise ? xn : cols.data(), ckk, plane);
        dwl.noalias() += dym * cm.transpose();
      }
      if (!db.empty()) dbl += dym.rowwise().sum();
      if (!dx.empty()) {
        double* dxn = dx.data() + n * in_stride;
        if (pointwise) {
          MapMat(dxn, ckk, plane).noalias() = wm.transpose() * dym;
        } else {
          dcols.noalias() = wm.transpose() * dym;
          col2im(g, dcols.data(), dxn);
        }
      }
    }
  }

  for (int t = 0; t < nthreads; ++t) {
    if (!dw.empty() && dw_part[t].size() > 0) MapMat(dw.data(), g.out_c, ckk) += dw_part[t];
    if (!db.empty() && db_part[t].size() > 0) {
      for (int oc = 0; oc < g.out_c; ++oc) db[oc] += db_part[t][oc];
    }
  }
}

void correlate(const CorrGeometry& g, std::span<const double> f1, std::span<const double> f2,
               std::span<double> vol) {
  const int n = g.positions, kc = g.channels;
  const std::size_t fs = std::size_t(kc) * n, vs = std::size_t(n) * n;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < g.batch; ++b) {
    const ConstMapMat a(f1.data() + b * fs, kc, n);
    const ConstMapMat c(f2.data() + b * fs, kc, n);
    MapMat(vol.data() + b * vs, n, n).noalias() = a.transpose() * c;
  }
}

void correlate_backward(const CorrGeometry& g, std::span<const double> f1,
                        std::span<const double> f2, std::span<const double> dvol,
                        std::span<double> df1, std::span<double> df2) {
  const int n = g.positions, kc = g.channels;
  const std::size_t fs = std::size_t(kc) * n, vs = std::size_t(n) * n;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < g.batch; ++b) {
    const ConstMapMat a(f1.data() + b * fs, kc, n);
    const ConstMapMat c(f2.data() + b * fs, kc, n);
    const ConstMapMat dv(dvol.data() + b * vs, n, n);
    MapMat(df1.data() + b * fs, kc, n).noalias() = c * dv.transpose();
    MapMat(df2.data() + b * fs, kc, n).noalias() = a * dv;
  }
}

}  // namespace omp
}  // namespace relrot::kernels
