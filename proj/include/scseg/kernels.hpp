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
#pragma once

// Raw volumetric kernels on contiguous NCDHW buffers.
//
// These are the OpenMP-parallel implementations used by the differentiable
// ops in nn_ops.hpp. Every kernel partitions work so that each output element
// is produced by exactly one thread in a fixed order; results therefore do not
// depend on the thread count. Kernels named *_backward_* accumulate (+=) into
// their outputs. Serial nested-loop counterparts live in reference.hpp.

#include <cstdint>
#include <span>
#include <string>

namespace scseg::kernels {

struct Dims3 {
  std::int64_t d = 1, h = 1, w = 1;

  std::int64_t volume() const { return d * h * w; }
  bool operator==(const Dims3&) const = default;
  std::string str() const;
};

/// Geometry of a (grouped, strided, zero-padded) cross-correlation.
/// Weight layout: [out_channels, in_channels / groups, kd, kh, kw].
struct ConvGeometry {
  std::int64_t batch = 1;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t groups = 1;
  Dims3 in, out, kernel, stride{1, 1, 1}, pad{0, 0, 0};

  /// Validates channel/group divisibility and derives `out`; throws ShapeError.
  static ConvGeometry make(std::int64_t batch, std::int64_t in_channels, Dims3 in,
                           std::int64_t out_channels, Dims3 kernel, Dims3 stride, Dims3 pad,
                           std::int64_t groups);

  std::int64_t in_per_group() const { return in_channels / groups; }
  std::int64_t out_per_group() const { return out_channels / groups; }
  std::int64_t patch_size() const { return in_per_group() * kernel.volume(); }
  bool pointwise() const;
};

template <typename T>
void conv3d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y);

template <typename T>
void conv3d_backward_input(const ConvGeometry& g, std::span<const T> dy,
                           std::span<const T> weight, std::span<T> dx);

/// `dbias` may be empty.
template <typename T>
void conv3d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dweight, std::span<T> dbias);

/// Non-overlapping r^3 mean pooling over `slices` independent volumes.
template <typename T>
void avg_pool3d_forward(std::int64_t slices, Dims3 in, std::int64_t r, std::span<const T> x,
                        std::span<T> y);
template <typename T>
void avg_pool3d_backward(std::int64_t slices, Dims3 in, std::int64_t r, std::span<const T> dy,
                         std::span<T> dx);

enum class Interp { Nearest, Trilinear };

template <typename T>
void upsample3d_forward(std::int64_t slices, Dims3 in, std::int64_t r, Interp mode,
                        std::span<const T> x, std::span<T> y);
template <typename T>
void upsample3d_backward(std::int64_t slices, Dims3 in, std::int64_t r, Interp mode,
                         std::span<const T> dy, std::span<T> dx);

/// Per (batch, channel) slice statistics are written to mean / inv_std
/// (length batch * channels) for reuse by the backward pass.
template <typename T>
void instance_norm_forward(std::int64_t batch, std::int64_t channels, std::int64_t spatial,
                           std::span<const T> x, std::span<const T> gamma,
                           std::span<const T> beta, double eps, std::span<T> y,
                           std::span<double> mean, std::span<double> inv_std);

/// Any of dx / dgamma / dbeta may be empty to skip it.
template <typename T>
void instance_norm_backward(std::int64_t batch, std::int64_t channels, std::int64_t spatial,
                            std::span<const T> x, std::span<const T> gamma,
                            std::span<const double> mean, std::span<const double> inv_std,
                            std::span<const T> dy, std::span<T> dx, std::span<T> dgamma,
                            std::span<T> dbeta);

}  // namespace scseg::kernels
