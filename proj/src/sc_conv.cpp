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
#include "scseg/sc_conv.hpp"

#include "scseg/errors.hpp"
#include "scseg/ops.hpp"

namespace scseg {

void SCConvConfig::validate() const {
  if (in_channels < 2 || in_channels % 2 != 0) {
    throw ConfigError("SC-Conv needs an even input channel count, got " +
                      std::to_string(in_channels));
  }
  if (out_channels < 1) throw ConfigError("SC-Conv needs a positive output channel count");
  if (r < 1) throw ConfigError("SC-Conv pooling rate r must be >= 1");
  auto check = [](std::int64_t k, const char* which) {
    if (k < 1 || k % 2 == 0) {
      throw ConfigError(std::string("SC-Conv ") + which + " kernel must be odd, got " +
                        std::to_string(k));
    }
  };
  check(split_kernel, "split");
  check(co_kernels[0], "CO1");
  check(co_kernels[1], "CO2");
  check(co_kernels[2], "CO3");
  check(co_kernels[3], "CO4");
  check(fuse_kernel, "CO5");
  if (act_slope < 0.0) throw ConfigError("SC-Conv activation slope must be >= 0");
}

template <typename T>
SCConvParams<T> SCConvParams<T>::create(const SCConvConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::int64_t c = cfg.in_channels;
  const std::int64_t h = c / 2;
  SCConvParams p;
  p.split = Conv3dParams<T>::create(c, c, cfg.split_kernel, rng, 1, 2, cfg.act_slope);
  p.co1 = ConvNormBlock<T>::create(h, h, cfg.co_kernels[0], rng, 1, cfg.act_slope);
  p.co2 = ConvNormBlock<T>::create(h, h, cfg.co_kernels[1], rng, 1, cfg.act_slope);
  p.co3 = ConvNormBlock<T>::create(h, h, cfg.co_kernels[2], rng, 1, cfg.act_slope);
  p.co4 = ConvNormBlock<T>::create(h, h, cfg.co_kernels[3], rng, 1, cfg.act_slope);
  p.co5 = ConvNormBlock<T>::create(c, cfg.out_channels, cfg.fuse_kernel, rng, 1, cfg.act_slope);
  p.r = cfg.r;
  p.act_slope = cfg.act_slope;
  p.upsample = cfg.upsample;
  return p;
}

template <typename T>
Tensor<T> sc_conv_forward(const Tensor<T>& x, const SCConvParams<T>& p, SCConvTrace<T>* trace) {
  const Dims3 in = spatial_dims(x, "sc_conv");
  const std::int64_t c = x.shape()[1];
  if (c % 2 != 0) {
    throw ShapeError("sc_conv: channel count " + std::to_string(c) + " is odd");
  }
  if (in.d % p.r || in.h % p.r || in.w % p.r) {
    throw ShapeError("sc_conv: spatial extent " + in.str() + " not divisible by r=" +
                     std::to_string(p.r));
  }
  const T slope = static_cast<T>(p.act_slope);

  auto [x1, x2] = split_channels(conv3d(x, p.split), c / 2);

  const Tensor<T> coarse = conv_norm(avg_pool3d(x1, p.r), p.co2);
  const Tensor<T> gate = sigmoid(add(x1, upsample3d(coarse, p.r, p.upsample)));
  const Tensor<T> calibrated = mul(gate, conv_norm(x1, p.co3));
  const Tensor<T> y1 = conv_norm_act(calibrated, p.co4, p.act_slope);
  const Tensor<T> y2 = conv_norm_act(x2, p.co1, p.act_slope);
  Tensor<T> y = leaky_relu(conv_norm(concat_channels(y1, y2), p.co5), slope);

  if (trace != nullptr) *trace = {x1, x2, gate, calibrated, y1, y2};
  return y;
}

std::int64_t sc_conv_param_count(const SCConvConfig& cfg) {
  cfg.validate();
  const std::int64_t c = cfg.in_channels;
  const std::int64_t h = c / 2;
  auto cube = [](std::int64_t k) { return k * k * k; };
  std::int64_t n = c * h * cube(cfg.split_kernel) + c;
  for (const std::int64_t k : cfg.co_kernels) n += h * h * cube(k) + h + 2 * h;
  n += cfg.out_channels * c * cube(cfg.fuse_kernel) + cfg.out_channels + 2 * cfg.out_channels;
  return n;
}

#define SCSEG_INSTANTIATE(T)                                                   \
  template struct SCConvParams<T>;                                             \
  template Tensor<T> sc_conv_forward<T>(const Tensor<T>&, const SCConvParams<T>&, \
                                        SCConvTrace<T>*);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg
