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

// Differentiable volumetric layers over [batch, channel, depth, height, width]
// tensors. Forward and backward passes run the parallel kernels.

#include <cstdint>
#include <string>

#include "scseg/kernels.hpp"
#include "scseg/rng.hpp"
#include "scseg/tensor.hpp"

namespace scseg {

using kernels::Dims3;
using kernels::Interp;

inline constexpr double kInstanceNormEps = 1e-5;

template <typename T>
struct Conv3dParams {
  Tensor<T> weight;  // [out_channels, in_channels / groups, kd, kh, kw]
  Tensor<T> bias;    // [out_channels]
  Dims3 stride{1, 1, 1};
  Dims3 padding{0, 0, 0};
  std::int64_t groups = 1;

  std::int64_t out_channels() const { return weight.shape()[0]; }
  std::int64_t in_channels() const { return weight.shape()[1] * groups; }
  Dims3 kernel() const { return {weight.shape()[2], weight.shape()[3], weight.shape()[4]}; }

  /// Cubic kernel with He-normal weights (leaky-ReLU gain) and zero bias.
  /// Padding defaults to "same" for odd kernels at stride 1.
  static Conv3dParams create(std::int64_t in_channels, std::int64_t out_channels,
                             std::int64_t kernel, Rng& rng, std::int64_t stride = 1,
                             std::int64_t groups = 1, double act_slope = 0.01);
};

/// Weight layout [in_channels, out_channels / groups, kd, kh, kw]: the same
/// tensor a forward conv mapping out -> in channels would use.
template <typename T>
struct ConvTranspose3dParams {
  Tensor<T> weight;
  Tensor<T> bias;  // [out_channels]
  Dims3 stride{1, 1, 1};
  Dims3 padding{0, 0, 0};
  std::int64_t groups = 1;

  std::int64_t in_channels() const { return weight.shape()[0]; }
  std::int64_t out_channels() const { return weight.shape()[1] * groups; }
  Dims3 kernel() const { return {weight.shape()[2], weight.shape()[3], weight.shape()[4]}; }

  static ConvTranspose3dParams create(std::int64_t in_channels, std::int64_t out_channels,
                                      std::int64_t kernel, std::int64_t stride, Rng& rng);
};

template <typename T>
struct InstanceNormParams {
  Tensor<T> gamma;  // [channels]
  Tensor<T> beta;   // [channels]
  double eps = kInstanceNormEps;

  std::int64_t channels() const { return gamma.numel(); }
  static InstanceNormParams create(std::int64_t channels);
};

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Conv3dParams<T>& p);

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& x, const ConvTranspose3dParams<T>& p);

/// Every spatial extent must be divisible by r.
template <typename T>
Tensor<T> avg_pool3d(const Tensor<T>& x, std::int64_t r);

template <typename T>
Tensor<T> upsample3d(const Tensor<T>& x, std::int64_t r, Interp mode);

/// Per-(batch, channel) standardization with biased variance, then affine.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const InstanceNormParams<T>& p);

/// Convolution followed by instance normalization, the unit every block in
/// the network is built from.
template <typename T>
struct ConvNormBlock {
  Conv3dParams<T> conv;
  InstanceNormParams<T> norm;

  static ConvNormBlock create(std::int64_t in_channels, std::int64_t out_channels,
                              std::int64_t kernel, Rng& rng, std::int64_t stride = 1,
                              double act_slope = 0.01) {
    return {Conv3dParams<T>::create(in_channels, out_channels, kernel, rng, stride, 1, act_slope),
            InstanceNormParams<T>::create(out_channels)};
  }
};

template <typename T>
Tensor<T> conv_norm(const Tensor<T>& x, const ConvNormBlock<T>& b);

/// conv_norm followed by leaky-ReLU.
template <typename T>
Tensor<T> conv_norm_act(const Tensor<T>& x, const ConvNormBlock<T>& b, double slope);

template <typename T>
void append_params(ParamList<T>& out, const std::string& prefix, const Conv3dParams<T>& p) {
  out.push_back({prefix + ".weight", p.weight});
  out.push_back({prefix + ".bias", p.bias});
}

template <typename T>
void append_params(ParamList<T>& out, const std::string& prefix,
                   const ConvTranspose3dParams<T>& p) {
  out.push_back({prefix + ".weight", p.weight});
  out.push_back({prefix + ".bias", p.bias});
}

template <typename T>
void append_params(ParamList<T>& out, const std::string& prefix, const InstanceNormParams<T>& p) {
  out.push_back({prefix + ".gamma", p.gamma});
  out.push_back({prefix + ".beta", p.beta});
}

template <typename T>
void append_params(ParamList<T>& out, const std::string& prefix, const ConvNormBlock<T>& b) {
  append_params(out, prefix + ".conv", b.conv);
  append_params(out, prefix + ".norm", b.norm);
}

/// Spatial extents of a 5-D tensor; throws unless rank is 5.
template <typename T>
Dims3 spatial_dims(const Tensor<T>& x, const char* op);

}  // namespace scseg
