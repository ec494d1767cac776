// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

// Dense numeric kernels used by the network. Every kernel has two
// implementations with identical signatures:
//   kernels::serial  direct loop nests, kept as the reference for tests
//   kernels::omp     im2col / GEMM formulation parallelized over the batch
// Tensors are contiguous row-major NCHW buffers of doubles.

namespace relrot::kernels {

struct ConvGeometry {
  int batch = 1;
  int in_c = 1, in_h = 1, in_w = 1;
  int out_c = 1;
  int kernel = 1, stride = 1, pad = 0;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  std::size_t in_size() const { return std::size_t(batch) * in_c * in_h * in_w; }
  std::size_t out_size() const { return std::size_t(batch) * out_c * out_h() * out_w(); }
  std::size_t weight_size() const { return std::size_t(out_c) * in_c * kernel * kernel; }
};

/// Geometry of a batch of all-pairs feature correlations: each item holds two
/// K x n feature matrices and produces an n x n score matrix.
struct CorrGeometry {
  int batch = 1;
  int channels = 1;
  int positions = 1;

  std::size_t feature_size() const { return std::size_t(batch) * channels * positions; }
  std::size_t volume_size() const { return std::size_t(batch) * positions * positions; }
};

namespace serial {

/// y = conv(x, w) + b. `bias` may be empty.
void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);

/// Writes dx (if non-empty) and accumulates into dw and db (if non-empty).
void conv2d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);

/// vol[b][i][j] = sum_k f1[b][k][i] * f2[b][k][j].
void correlate(const CorrGeometry& g, std::span<const double> f1, std::span<const double> f2,
               std::span<double> vol);

/// Gradients of correlate with respect to both feature batches (overwritten).
void correlate_backward(const CorrGeometry& g, std::span<const double> f1,
                        std::span<const double> f2, std::span<const double> dvol,
                        std::span<double> df1, std::span<double> df2);

}  // namespace serial

namespace omp {

void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);

void conv2d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);

void correlate(const CorrGeometry& g, std::span<const double> f1, std::span<const double> f2,
               std::span<double> vol);

void correlate_backward(const CorrGeometry& g, std::span<const double> f1,
                        std::span<const double> f2, std::span<const double> dvol,
                        std::span<double> df1, std::span<double> df2);

}  // namespace omp

/// Sets the OpenMP thread count used by the omp kernels (<= 0 keeps the default).
void set_num_threads(int n);
int max_threads();

}  // namespace relrot::kernels
