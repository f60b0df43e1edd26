/* Copyright 2026 The scseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "scseg/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "scseg/errors.hpp"
#include "scseg/parallel.hpp"

namespace scseg::kernels {

using parallel::parallel_for;

std::string Dims3::str() const {
  return std::to_string(d) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

namespace {

std::int64_t conv_extent(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t p,
                         const char* axis) {
  if (k < 1 || s < 1 || p < 0) {
    throw ShapeError(std::string("conv3d: invalid kernel/stride/padding on axis ") + axis);
  }
  if (in + 2 * p < k) {
    throw ShapeError(std::string("conv3d: kernel ") + std::to_string(k) +
                     " larger than padded input " + std::to_string(in + 2 * p) + " on axis " +
                     axis);
  }
  return (in + 2 * p - k) / s + 1;
}

}  // namespace

ConvGeometry ConvGeometry::make(std::int64_t batch, std::int64_t in_channels, Dims3 in,
                                std::int64_t out_channels, Dims3 kernel, Dims3 stride, Dims3 pad,
                                std::int64_t groups) {
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ShapeError("conv3d: channels " + std::to_string(in_channels) + "->" +
                     std::to_string(out_channels) + " not divisible by groups " +
                     std::to_string(groups));
  }
  ConvGeometry g;
  g.batch = batch;
  g.in_channels = in_channels;
  g.out_channels = out_channels;
  g.groups = groups;
  g.in = in;
  g.kernel = kernel;
  g.stride = stride;
  g.pad = pad;
  g.out = {conv_extent(in.d, kernel.d, stride.d, pad.d, "depth"),
           conv_extent(in.h, kernel.h, stride.h, pad.h, "height"),
           conv_extent(in.w, kernel.w, stride.w, pad.w, "width")};
  return g;
}

bool ConvGeometry::pointwise() const {
  return kernel == Dims3{1, 1, 1} && stride == Dims3{1, 1, 1} && pad == Dims3{0, 0, 0};
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstView = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using View = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;

// Fixed tile widths: the partition of a product never depends on how many
// threads execute it.
constexpr std::int64_t kTileCols = 2048;
constexpr std::int64_t kTileRows = 64;

// C[M x N] (+)= A[M x K] * B[K x N]
template <typename T>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  const std::int64_t tiles = (n + kTileCols - 1) / kTileCols;
  parallel_for(tiles, [&](std::int64_t t) {
    const std::int64_t n0 = t * kTileCols;
    const std::int64_t nt = std::min(kTileCols, n - n0);
    ConstView<T> av(a, m, k, Eigen::OuterStride<>(k));
    ConstView<T> bv(b + n0, k, nt, Eigen::OuterStride<>(n));
    View<T> cv(c + n0, m, nt, Eigen::OuterStride<>(n));
    if (accumulate) {
      cv.noalias() += av * bv;
    } else {
      cv.noalias() = av * bv;
    }
  }, kTileCols * m * k);
}

// C[M x N] (+)= A^T * B with A stored as [K x M].
template <typename T>
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  const std::int64_t tiles = (n + kTileCols - 1) / kTileCols;
  parallel_for(tiles, [&](std::int64_t t) {
    const std::int64_t n0 = t * kTileCols;
    const std::int64_t nt = std::min(kTileCols, n - n0);
    ConstView<T> av(a, k, m, Eigen::OuterStride<>(m));
    ConstView<T> bv(b + n0, k, nt, Eigen::OuterStride<>(n));
    View<T> cv(c + n0, m, nt, Eigen::OuterStride<>(n));
    if (accumulate) {
      cv.noalias() += av.transpose() * bv;
    } else {
      cv.noalias() = av.transpose() * bv;
    }
  }, kTileCols * m * k);
}

// C[M x N] += A[M x K] * B^T with B stored as [N x K]. Tiled over N.
template <typename T>
void gemm_nt_acc(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c) {
  const std::int64_t tiles = (n + kTileRows - 1) / kTileRows;
  parallel_for(tiles, [&](std::int64_t t) {
    const std::int64_t n0 = t * kTileRows;
    const std::int64_t nt = std::min(kTileRows, n - n0);
    ConstView<T> av(a, m, k, Eigen::OuterStride<>(k));
    ConstView<T> bv(b + n0 * k, nt, k, Eigen::OuterStride<>(k));
    View<T> cv(c + n0, m, nt, Eigen::OuterStride<>(n));
    cv.noalias() += av * bv.transpose();
  }, kTileRows * m * k);
}

struct KernelOffset {
  std::int64_t kz, ky, kx;
};

KernelOffset kernel_offset(const ConvGeometry& g, std::int64_t rem) {
  const std::int64_t plane = g.kernel.h * g.kernel.w;
  return {rem / plane, (rem / g.kernel.w) % g.kernel.h, rem % g.kernel.w};
}

// Output x-positions [lo, hi) whose input column ox*s - p + kx is in range.
std::pair<std::int64_t, std::int64_t> valid_range(std::int64_t in, std::int64_t out,
                                                  std::int64_t s, std::int64_t p,
                                                  std::int64_t k) {
  const std::int64_t first = p - k;  // need o*s >= p - k
  std::int64_t lo = first > 0 ? (first + s - 1) / s : 0;
  const std::int64_t last = in - 1 + p - k;  // need o*s <= in - 1 + p - k
  std::int64_t hi = last < 0 ? 0 : std::min(out, last / s + 1);
  lo = std::min(lo, out);
  hi = std::max(hi, lo);
  return {lo, hi};
}

// Rows of `col` are (channel-in-group, kz, ky, kx); columns are output voxels.
template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
  const std::int64_t kvol = g.kernel.volume();
  const std::int64_t rows = g.patch_size();
  const std::int64_t n = g.out.volume();
  const std::int64_t in_vol = g.in.volume();
  parallel_for(rows, [&](std::int64_t r) {
    const std::int64_t c = r / kvol;
    const auto [kz, ky, kx] = kernel_offset(g, r % kvol);
    const T* xc = x + c * in_vol;
    T* row = col + r * n;
    const auto [lo, hi] = valid_range(g.in.w, g.out.w, g.stride.w, g.pad.w, kx);
    for (std::int64_t od = 0; od < g.out.d; ++od) {
      const std::int64_t iz = od * g.stride.d - g.pad.d + kz;
      for (std::int64_t oh = 0; oh < g.out.h; ++oh) {
        const std::int64_t iy = oh * g.stride.h - g.pad.h + ky;
        T* dst = row + (od * g.out.h + oh) * g.out.w;
        if (iz < 0 || iz >= g.in.d || iy < 0 || iy >= g.in.h) {
          std::fill(dst, dst + g.out.w, T(0));
          continue;
        }
        const T* src = xc + (iz * g.in.h + iy) * g.in.w;
        std::fill(dst, dst + lo, T(0));
        if (g.stride.w == 1) {
          if (hi > lo) std::copy(src + lo - g.pad.w + kx, src + hi - g.pad.w + kx, dst + lo);
        } else {
          for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow] = src[ow * g.stride.w - g.pad.w + kx];
        }
        std::fill(dst + hi, dst + g.out.w, T(0));
      }
    }
  }, n);
}

// Adjoint of im2col: scatter-add columns back into the input grid.
template <typename T>
void col2im_acc(const ConvGeometry& g, const T* col, T* x) {
  const std::int64_t kvol = g.kernel.volume();
  const std::int64_t n = g.out.volume();
  const std::int64_t in_vol = g.in.volume();
  parallel_for(g.in_per_group(), [&](std::int64_t c) {
    T* xc = x + c * in_vol;
    for (std::int64_t rem = 0; rem < kvol; ++rem) {
      const auto [kz, ky, kx] = kernel_offset(g, rem);
      const T* row = col + (c * kvol + rem) * n;
      const auto [lo, hi] = valid_range(g.in.w, g.out.w, g.stride.w, g.pad.w, kx);
      for (std::int64_t od = 0; od < g.out.d; ++od) {
        const std::int64_t iz = od * g.stride.d - g.pad.d + kz;
        if (iz < 0 || iz >= g.in.d) continue;
        for (std::int64_t oh = 0; oh < g.out.h; ++oh) {
          const std::int64_t iy = oh * g.stride.h - g.pad.h + ky;
          if (iy < 0 || iy >= g.in.h) continue;
          const T* src = row + (od * g.out.h + oh) * g.out.w;
          T* dst = xc + (iz * g.in.h + iy) * g.in.w;
          for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow * g.stride.w - g.pad.w + kx] += src[ow];
        }
      }
    }
  }, n * kvol);
}

}  // namespace

template <typename T>
void conv3d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y) {
  const std::int64_t cin = g.in_per_group();
  const std::int64_t cout = g.out_per_group();
  const std::int64_t k = g.patch_size();
  const std::int64_t n = g.out.volume();
  std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(k * n));
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t grp = 0; grp < g.groups; ++grp) {
      const T* xg = x.data() + (b * g.in_channels + grp * cin) * g.in.volume();
      T* yg = y.data() + (b * g.out_channels + grp * cout) * n;
      const T* wg = weight.data() + grp * cout * k;
      const T* rhs = xg;
      if (!g.pointwise()) {
        im2col(g, xg, col.data());
        rhs = col.data();
      }
      gemm_nn(cout, n, k, wg, rhs, yg, false);
      if (!bias.empty()) {
        parallel_for(cout, [&](std::int64_t c) {
          const T bv = bias[grp * cout + c];
          T* row = yg + c * n;
          for (std::int64_t i = 0; i < n; ++i) row[i] += bv;
        }, n);
      }
    }
  }
}

template <typename T>
void conv3d_backward_input(const ConvGeometry& g, std::span<const T> dy,
                           std::span<const T> weight, std::span<T> dx) {
  const std::int64_t cin = g.in_per_group();
  const std::int64_t cout = g.out_per_group();
  const std::int64_t k = g.patch_size();
  const std::int64_t n = g.out.volume();
  std::vector<T> dcol(g.pointwise() ? 0 : static_cast<std::size_t>(k * n));
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t grp = 0; grp < g.groups; ++grp) {
      T* dxg = dx.data() + (b * g.in_channels + grp * cin) * g.in.volume();
      const T* dyg = dy.data() + (b * g.out_channels + grp * cout) * n;
      const T* wg = weight.data() + grp * cout * k;
      if (g.pointwise()) {
        gemm_tn(k, n, cout, wg, dyg, dxg, true);
      } else {
        gemm_tn(k, n, cout, wg, dyg, dcol.data(), false);
        col2im_acc(g, dcol.data(), dxg);
      }
    }
  }
}

template <typename T>
void conv3d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dweight, std::span<T> dbias) {
  const std::int64_t cin = g.in_per_group();
  const std::int64_t cout = g.out_per_group();
  const std::int64_t k = g.patch_size();
  const std::int64_t n = g.out.volume();
  if (!dweight.empty()) {
    std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(k * n));
    for (std::int64_t b = 0; b < g.batch; ++b) {
      for (std::int64_t grp = 0; grp < g.groups; ++grp) {
        const T* xg = x.data() + (b * g.in_channels + grp * cin) * g.in.volume();
        const T* dyg = dy.data() + (b * g.out_channels + grp * cout) * n;
        const T* rhs = xg;
        if (!g.pointwise()) {
          im2col(g, xg, col.data());
          rhs = col.data();
        }
        gemm_nt_acc(cout, k, n, dyg, rhs, dweight.data() + grp * cout * k);
      }
    }
  }
  if (!dbias.empty()) {
    parallel_for(g.out_channels, [&](std::int64_t c) {
      double s = 0.0;
      for (std::int64_t b = 0; b < g.batch; ++b) {
        const T* row = dy.data() + (b * g.out_channels + c) * n;
        for (std::int64_t i = 0; i < n; ++i) s += row[i];
      }
      dbias[c] += static_cast<T>(s);
    }, g.batch * n);
  }
}

template <typename T>
void avg_pool3d_forward(std::int64_t slices, Dims3 in, std::int64_t r, std::span<const T> x,
                        std::span<T> y) {
  const Dims3 out{in.d / r, in.h / r, in.w / r};
  // Accumulating in double keeps the mean of a constant float block exact.
  const double cells = static_cast<double>(r * r * r);
  parallel_for(slices, [&](std::int64_t s) {
    const T* xs = x.data() + s * in.volume();
    T* ys = y.data() + s * out.volume();
    for (std::int64_t od = 0; od < out.d; ++od)
      for (std::int64_t oh = 0; oh < out.h; ++oh)
        for (std::int64_t ow = 0; ow < out.w; ++ow) {
          double acc = 0.0;
          for (std::int64_t a = 0; a < r; ++a)
            for (std::int64_t b = 0; b < r; ++b) {
              const T* src = xs + ((od * r + a) * in.h + oh * r + b) * in.w + ow * r;
              for (std::int64_t c = 0; c < r; ++c) acc += src[c];
            }
          ys[(od * out.h + oh) * out.w + ow] = static_cast<T>(acc / cells);
        }
  }, in.volume());
}

template <typename T>
void avg_pool3d_backward(std::int64_t slices, Dims3 in, std::int64_t r, std::span<const T> dy,
                         std::span<T> dx) {
  const Dims3 out{in.d / r, in.h / r, in.w / r};
  const T inv = T(1) / static_cast<T>(r * r * r);
  parallel_for(slices, [&](std::int64_t s) {
    T* xs = dx.data() + s * in.volume();
    const T* ys = dy.data() + s * out.volume();
    for (std::int64_t z = 0; z < in.d; ++z)
      for (std::int64_t yy = 0; yy < in.h; ++yy) {
        const T* src = ys + ((z / r) * out.h + yy / r) * out.w;
        T* dst = xs + (z * in.h + yy) * in.w;
        for (std::int64_t xx = 0; xx < in.w; ++xx) dst[xx] += src[xx / r] * inv;
      }
  }, in.volume());
}

namespace {

// Linear interpolation taps along one axis, half-pixel centers, edge clamped.
template <typename T>
struct AxisTaps {
  std::vector<std::int64_t> i0, i1;
  std::vector<T> w0, w1;

  AxisTaps(std::int64_t in, std::int64_t r) {
    const std::int64_t out = in * r;
    i0.resize(out);
    i1.resize(out);
    w0.resize(out);
    w1.resize(out);
    for (std::int64_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) / static_cast<double>(r) - 0.5;
      if (src < 0.0) src = 0.0;
      const auto lo = std::min<std::int64_t>(static_cast<std::int64_t>(src), in - 1);
      const double frac = src - static_cast<double>(lo);
      i0[o] = lo;
      i1[o] = std::min(lo + 1, in - 1);
      w1[o] = static_cast<T>(frac);
      w0[o] = static_cast<T>(1.0 - frac);
    }
  }
};

}  // namespace

template <typename T>
void upsample3d_forward(std::int64_t slices, Dims3 in, std::int64_t r, Interp mode,
                        std::span<const T> x, std::span<T> y) {
  const Dims3 out{in.d * r, in.h * r, in.w * r};
  if (r == 1) {
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  if (mode == Interp::Nearest) {
    parallel_for(slices, [&](std::int64_t s) {
      const T* xs = x.data() + s * in.volume();
      T* ys = y.data() + s * out.volume();
      for (std::int64_t z = 0; z < out.d; ++z)
        for (std::int64_t yy = 0; yy < out.h; ++yy) {
          const T* src = xs + ((z / r) * in.h + yy / r) * in.w;
          T* dst = ys + (z * out.h + yy) * out.w;
          for (std::int64_t xx = 0; xx < out.w; ++xx) dst[xx] = src[xx / r];
        }
    }, out.volume());
    return;
  }
  const AxisTaps<T> tz(in.d, r), ty(in.h, r), tx(in.w, r);
  parallel_for(slices, [&](std::int64_t s) {
    const T* xs = x.data() + s * in.volume();
    T* ys = y.data() + s * out.volume();
    for (std::int64_t z = 0; z < out.d; ++z) {
      const T* p0 = xs + tz.i0[z] * in.h * in.w;
      const T* p1 = xs + tz.i1[z] * in.h * in.w;
      for (std::int64_t yy = 0; yy < out.h; ++yy) {
        const T* r00 = p0 + ty.i0[yy] * in.w;
        const T* r01 = p0 + ty.i1[yy] * in.w;
        const T* r10 = p1 + ty.i0[yy] * in.w;
        const T* r11 = p1 + ty.i1[yy] * in.w;
        const T a00 = tz.w0[z] * ty.w0[yy], a01 = tz.w0[z] * ty.w1[yy];
        const T a10 = tz.w1[z] * ty.w0[yy], a11 = tz.w1[z] * ty.w1[yy];
        T* dst = ys + (z * out.h + yy) * out.w;
        for (std::int64_t xx = 0; xx < out.w; ++xx) {
          const std::int64_t x0 = tx.i0[xx], x1 = tx.i1[xx];
          const T b0 = tx.w0[xx], b1 = tx.w1[xx];
          dst[xx] = a00 * (b0 * r00[x0] + b1 * r00[x1]) + a01 * (b0 * r01[x0] + b1 * r01[x1]) +
                    a10 * (b0 * r10[x0] + b1 * r10[x1]) + a11 * (b0 * r11[x0] + b1 * r11[x1]);
        }
      }
    }
  }, out.volume());
}

template <typename T>
void upsample3d_backward(std::int64_t slices, Dims3 in, std::int64_t r, Interp mode,
                         std::span<const T> dy, std::span<T> dx) {
  const Dims3 out{in.d * r, in.h * r, in.w * r};
  if (r == 1) {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    return;
  }
  if (mode == Interp::Nearest) {
    parallel_for(slices, [&](std::int64_t s) {
      T* xs = dx.data() + s * in.volume();
      const T* ys = dy.data() + s * out.volume();
      for (std::int64_t z = 0; z < out.d; ++z)
        for (std::int64_t yy = 0; yy < out.h; ++yy) {
          T* dst = xs + ((z / r) * in.h + yy / r) * in.w;
          const T* src = ys + (z * out.h + yy) * out.w;
          for (std::int64_t xx = 0; xx < out.w; ++xx) dst[xx / r] += src[xx];
        }
    }, out.volume());
    return;
  }
  const AxisTaps<T> tz(in.d, r), ty(in.h, r), tx(in.w, r);
  parallel_for(slices, [&](std::int64_t s) {
    T* xs = dx.data() + s * in.volume();
    const T* ys = dy.data() + s * out.volume();
    for (std::int64_t z = 0; z < out.d; ++z) {
      T* p0 = xs + tz.i0[z] * in.h * in.w;
      T* p1 = xs + tz.i1[z] * in.h * in.w;
      for (std::int64_t yy = 0; yy < out.h; ++yy) {
        T* r00 = p0 + ty.i0[yy] * in.w;
        T* r01 = p0 + ty.i1[yy] * in.w;
        T* r10 = p1 + ty.i0[yy] * in.w;
        T* r11 = p1 + ty.i1[yy] * in.w;
        const T a00 = tz.w0[z] * ty.w0[yy], a01 = tz.w0[z] * ty.w1[yy];
        const T a10 = tz.w1[z] * ty.w0[yy], a11 = tz.w1[z] * ty.w1[yy];
        const T* src = ys + (z * out.h + yy) * out.w;
        for (std::int64_t xx = 0; xx < out.w; ++xx) {
          const std::int64_t x0 = tx.i0[xx], x1 = tx.i1[xx];
          const T g0 = tx.w0[xx] * src[xx], g1 = tx.w1[xx] * src[xx];
          r00[x0] += a00 * g0;
          r00[x1] += a00 * g1;
          r01[x0] += a01 * g0;
          r01[x1] += a01 * g1;
          r10[x0] += a10 * g0;
          r10[x1] += a10 * g1;
          r11[x0] += a11 * g0;
          r11[x1] += a11 * g1;
        }
      }
    }
  }, out.volume());
}

template <typename T>
void instance_norm_forward(std::int64_t batch, std::int64_t channels, std::int64_t spatial,
                           std::span<const T> x, std::span<const T> gamma,
                           std::span<const T> beta, double eps, std::span<T> y,
                           std::span<double> mean, std::span<double> inv_std) {
  parallel_for(batch * channels, [&](std::int64_t s) {
    const std::int64_t c = s % channels;
    const T* xs = x.data() + s * spatial;
    T* ys = y.data() + s * spatial;
    double m = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) m += xs[i];
    m /= static_cast<double>(spatial);
    double v = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) {
      const double d = xs[i] - m;
      v += d * d;
    }
    v /= static_cast<double>(spatial);
    const double is = 1.0 / std::sqrt(v + eps);
    mean[s] = m;
    inv_std[s] = is;
    const double gm = gamma[c] * is;
    const double bt = beta[c];
    for (std::int64_t i = 0; i < spatial; ++i) ys[i] = static_cast<T>((xs[i] - m) * gm + bt);
  }, spatial);
}

template <typename T>
void instance_norm_backward(std::int64_t batch, std::int64_t channels, std::int64_t spatial,
                            std::span<const T> x, std::span<const T> gamma,
                            std::span<const double> mean, std::span<const double> inv_std,
                            std::span<const T> dy, std::span<T> dx, std::span<T> dgamma,
                            std::span<T> dbeta) {
  const std::int64_t slices = batch * channels;
  std::vector<double> sum_dy(slices), sum_dy_xhat(slices);
  const double inv_n = 1.0 / static_cast<double>(spatial);
  parallel_for(slices, [&](std::int64_t s) {
    const T* xs = x.data() + s * spatial;
    const T* gs = dy.data() + s * spatial;
    const double m = mean[s], is = inv_std[s];
    double a = 0.0, b = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) {
      a += gs[i];
      b += gs[i] * (xs[i] - m) * is;
    }
    sum_dy[s] = a;
    sum_dy_xhat[s] = b;
    if (!dx.empty()) {
      T* out = dx.data() + s * spatial;
      const double scale = gamma[s % channels] * is;
      for (std::int64_t i = 0; i < spatial; ++i) {
        const double xhat = (xs[i] - m) * is;
        out[i] += static_cast<T>(scale * (gs[i] - a * inv_n - xhat * b * inv_n));
      }
    }
  }, spatial);
  for (std::int64_t c = 0; c < channels; ++c) {
    double sg = 0.0, sb = 0.0;
    for (std::int64_t b = 0; b < batch; ++b) {
      sg += sum_dy_xhat[b * channels + c];
      sb += sum_dy[b * channels + c];
    }
    if (!dgamma.empty()) dgamma[c] += static_cast<T>(sg);
    if (!dbeta.empty()) dbeta[c] += static_cast<T>(sb);
  }
}

#define SCSEG_INSTANTIATE(T)                                                                    \
  template void conv3d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,  \
                                  std::span<const T>, std::span<T>);                            \
  template void conv3d_backward_input<T>(const ConvGeometry&, std::span<const T>,               \
                                         std::span<const T>, std::span<T>);                     \
  template void conv3d_backward_weight<T>(const ConvGeometry&, std::span<const T>,              \
                                          std::span<const T>, std::span<T>, std::span<T>);      \
  template void avg_pool3d_forward<T>(std::int64_t, Dims3, std::int64_t, std::span<const T>,    \
                                      std::span<T>);                                            \
  template void avg_pool3d_backward<T>(std::int64_t, Dims3, std::int64_t, std::span<const T>,   \
                                       std::span<T>);                                           \
  template void upsample3d_forward<T>(std::int64_t, Dims3, std::int64_t, Interp,                \
                                      std::span<const T>, std::span<T>);                        \
  template void upsample3d_backward<T>(std::int64_t, Dims3, std::int64_t, Interp,               \
                                       std::span<const T>, std::span<T>);                       \
  template void instance_norm_forward<T>(std::int64_t, std::int64_t, std::int64_t,              \
                                         std::span<const T>, std::span<const T>,                \
                                         std::span<const T>, double, std::span<T>,              \
                                         std::span<double>, std::span<double>);                 \
  template void instance_norm_backward<T>(std::int64_t, std::int64_t, std::int64_t,             \
                                          std::span<const T>, std::span<const T>,               \
                                          std::span<const double>, std::span<const double>,     \
                                          std::span<const T>, std::span<T>, std::span<T>,       \
                                          std::span<T>);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg::kernels
