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

// Serial nested-loop versions of the volumetric kernels. They follow the
// textbook definitions voxel by voxel and exist to check and benchmark the
// parallel kernels; nothing on the training path calls them.

#include <span>
#include <vector>

#include "scseg/kernels.hpp"

namespace scseg::reference {

template <typename T>
std::vector<T> conv3d(const kernels::ConvGeometry& g, std::span<const T> x,
                      std::span<const T> weight, std::span<const T> bias);

/// Transposed convolution whose forward counterpart has geometry `g`:
/// input has g.out extents and g.out_channels channels, output has g.in
/// extents and g.in_channels channels. Weight uses the forward layout.
template <typename T>
std::vector<T> conv_transpose3d(const kernels::ConvGeometry& g, std::span<const T> x,
                                std::span<const T> weight, std::span<const T> bias);

template <typename T>
std::vector<T> avg_pool3d(std::int64_t slices, kernels::Dims3 in, std::int64_t r,
                          std::span<const T> x);

template <typename T>
std::vector<T> upsample3d(std::int64_t slices, kernels::Dims3 in, std::int64_t r,
                          kernels::Interp mode, std::span<const T> x);

template <typename T>
std::vector<T> instance_norm(std::int64_t batch, std::int64_t channels, std::int64_t spatial,
                             std::span<const T> x, std::span<const T> gamma,
                             std::span<const T> beta, double eps);

}  // namespace scseg::reference
