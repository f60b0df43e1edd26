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
#include "scseg/reference.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace scseg::reference {

using kernels::ConvGeometry;
using kernels::Dims3;

template <typename T>
std::vector<T> conv3d(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                      std::span<const T> bias) {
  const auto cin_g = g.in_per_group();
  const auto cout_g = g.out_per_group();
  std::vector<T> y(g.batch * g.out_channels * g.out.volume());
  for (std::int64_t b = 0; b < g.batch; ++b)
    for (std::int64_t oc = 0; oc < g.out_channels; ++oc) {
      const std::int64_t grp = oc / cout_g;
      for (std::int64_t od = 0; od < g.out.d; ++od)
        for (std::int64_t oh = 0; oh < g.out.h; ++oh)
          for (std::int64_t ow = 0; ow < g.out.w; ++ow) {
            double acc = bias.empty() ? 0.0 : bias[oc];
            for (std::int64_t ic = 0; ic < cin_g; ++ic)
              for (std::int64_t kz = 0; kz < g.kernel.d; ++kz)
                for (std::int64_t ky = 0; ky < g.kernel.h; ++ky)
                  for (std::int64_t kx = 0; kx < g.kernel.w; ++kx) {
                    const std::int64_t iz = od * g.stride.d - g.pad.d + kz;
                    const std::int64_t iy = oh * g.stride.h - g.pad.h + ky;
                    const std::int64_t ix = ow * g.stride.w - g.pad.w + kx;
                    if (iz < 0 || iy < 0 || ix < 0 || iz >= g.in.d || iy >= g.in.h ||
                        ix >= g.in.w)
                      continue;
                    const std::int64_t c = grp * cin_g + ic;
                    const T xv = x[(((b * g.in_channels + c) * g.in.d + iz) * g.in.h + iy) *
                                       g.in.w +
                                   ix];
                    const T wv = weight[(((oc * cin_g + ic) * g.kernel.d + kz) * g.kernel.h +
                                         ky) *
                                            g.kernel.w +
                                        kx];
                    acc += static_cast<double>(xv) * wv;
                  }
            y[(((b * g.out_channels + oc) * g.out.d + od) * g.out.h + oh) * g.out.w + ow] =
                static_cast<T>(acc);
          }
    }
  return y;
}

template <typename T>
std::vector<T> conv_transpose3d(const ConvGeometry& g, std::span<const T> x,
                                std::span<const T> weight, std::span<const T> bias) {
  const auto cin_g = g.in_per_group();
  const auto cout_g = g.out_per_group();
  std::vector<double> acc(g.batch * g.in_channels * g.in.volume(), 0.0);
  // Scatter form: every input voxel spreads weight-scaled copies of itself.
  for (std::int64_t b = 0; b < g.batch; ++b)
    for (std::int64_t oc = 0; oc < g.out_channels; ++oc) {
      const std::int64_t grp = oc / cout_g;
      for (std::int64_t od = 0; od < g.out.d; ++od)
        for (std::int64_t oh = 0; oh < g.out.h; ++oh)
          for (std::int64_t ow = 0; ow < g.out.w; ++ow) {
            const T xv =
                x[(((b * g.out_channels + oc) * g.out.d + od) * g.out.h + oh) * g.out.w + ow];
            for (std::int64_t ic = 0; ic < cin_g; ++ic)
              for (std::int64_t kz = 0; kz < g.kernel.d; ++kz)
                for (std::int64_t ky = 0; ky < g.kernel.h; ++ky)
                  for (std::int64_t kx = 0; kx < g.kernel.w; ++kx) {
                    const std::int64_t iz = od * g.stride.d - g.pad.d + kz;
                    const std::int64_t iy = oh * g.stride.h - g.pad.h + ky;
                    const std::int64_t ix = ow * g.stride.w - g.pad.w + kx;
                    if (iz < 0 || iy < 0 || ix < 0 || iz >= g.in.d || iy >= g.in.h ||
                        ix >= g.in.w)
                      continue;
                    const std::int64_t c = grp * cin_g + ic;
                    const T wv = weight[(((oc * cin_g + ic) * g.kernel.d + kz) * g.kernel.h +
                                         ky) *
                                            g.kernel.w +
                                        kx];
                    acc[(((b * g.in_channels + c) * g.in.d + iz) * g.in.h + iy) * g.in.w + ix] +=
                        static_cast<double>(xv) * wv;
                  }
          }
    }
  std::vector<T> y(acc.size());
  const std::int64_t vol = g.in.volume();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const std::int64_t c = (static_cast<std::int64_t>(i) / vol) % g.in_channels;
    y[i] = static_cast<T>(acc[i] + (bias.empty() ? 0.0 : bias[c]));
  }
  return y;
}

template <typename T>
std::vector<T> avg_pool3d(std::int64_t slices, Dims3 in, std::int64_t r, std::span<const T> x) {
  const Dims3 out{in.d / r, in.h / r, in.w / r};
  std::vector<T> y(slices * out.volume());
  for (std::int64_t s = 0; s < slices; ++s)
    for (std::int64_t od = 0; od < out.d; ++od)
      for (std::int64_t oh = 0; oh < out.h; ++oh)
        for (std::int64_t ow = 0; ow < out.w; ++ow) {
          double acc = 0.0;
          for (std::int64_t a = 0; a < r; ++a)
            for (std::int64_t b = 0; b < r; ++b)
              for (std::int64_t c = 0; c < r; ++c)
                acc += x[((s * in.d + od * r + a) * in.h + oh * r + b) * in.w + ow * r + c];
          y[((s * out.d + od) * out.h + oh) * out.w + ow] =
              static_cast<T>(acc / static_cast<double>(r * r * r));
        }
  return y;
}

template <typename T>
std::vector<T> upsample3d(std::int64_t slices, Dims3 in, std::int64_t r, kernels::Interp mode,
                          std::span<const T> x) {
  const Dims3 out{in.d * r, in.h * r, in.w * r};
  std::vector<T> y(slices * out.volume());
  // Source coordinate and the two neighbouring taps along one axis.
  auto taps = [r](std::int64_t o, std::int64_t n) {
    double src = (o + 0.5) / static_cast<double>(r) - 0.5;
    src = std::max(src, 0.0);
    const auto i0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(src)), n - 1);
    const auto i1 = std::min<std::int64_t>(i0 + 1, n - 1);
    return std::tuple{i0, i1, src - static_cast<double>(i0)};
  };
  for (std::int64_t s = 0; s < slices; ++s)
    for (std::int64_t z = 0; z < out.d; ++z)
      for (std::int64_t yy = 0; yy < out.h; ++yy)
        for (std::int64_t xx = 0; xx < out.w; ++xx) {
          auto at = [&](std::int64_t a, std::int64_t b, std::int64_t c) {
            return static_cast<double>(x[((s * in.d + a) * in.h + b) * in.w + c]);
          };
          double v;
          if (mode == kernels::Interp::Nearest) {
            v = at(z / r, yy / r, xx / r);
          } else {
            const auto [z0, z1, fz] = taps(z, in.d);
            const auto [y0, y1, fy] = taps(yy, in.h);
            const auto [x0, x1, fx] = taps(xx, in.w);
            v = 0.0;
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) {
                  const double w = (a ? fz : 1 - fz) * (b ? fy : 1 - fy) * (c ? fx : 1 - fx);
                  v += w * at(a ? z1 : z0, b ? y1 : y0, c ? x1 : x0);
                }
          }
          y[((s * out.d + z) * out.h + yy) * out.w + xx] = static_cast<T>(v);
        }
  return y;
}

template <typename T>
std::vector<T> instance_norm(std::int64_t batch, std::int64_t channels, std::int64_t spatial,
                             std::span<const T> x, std::span<const T> gamma,
                             std::span<const T> beta, double eps) {
  std::vector<T> y(x.size());
  for (std::int64_t s = 0; s < batch * channels; ++s) {
    const std::int64_t c = s % channels;
    double mean = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) mean += x[s * spatial + i];
    mean /= spatial;
    double var = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) {
      const double d = x[s * spatial + i] - mean;
      var += d * d;
    }
    var /= spatial;
    for (std::int64_t i = 0; i < spatial; ++i) {
      y[s * spatial + i] =
          static_cast<T>(gamma[c] * (x[s * spatial + i] - mean) / std::sqrt(var + eps) + beta[c]);
    }
  }
  return y;
}

#define SCSEG_INSTANTIATE(T)                                                                   \
  template std::vector<T> conv3d<T>(const ConvGeometry&, std::span<const T>, std::span<const T>, \
                                    std::span<const T>);                                       \
  template std::vector<T> conv_transpose3d<T>(const ConvGeometry&, std::span<const T>,         \
                                              std::span<const T>, std::span<const T>);         \
  template std::vector<T> avg_pool3d<T>(std::int64_t, Dims3, std::int64_t, std::span<const T>); \
  template std::vector<T> upsample3d<T>(std::int64_t, Dims3, std::int64_t, kernels::Interp,    \
                                        std::span<const T>);                                   \
  template std::vector<T> instance_norm<T>(std::int64_t, std::int64_t, std::int64_t,           \
                                           std::span<const T>, std::span<const T>,             \
                                           std::span<const T>, double);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg::reference
