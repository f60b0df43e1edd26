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

// Volumetric self-calibrated convolution.
//
// The input (C channels) passes through a pointwise grouped "split" conv and
// is cut into halves X1 and X2. X2 takes an ordinary conv path (CO1). X1 is
// recalibrated: a gate sigmoid(X1 + up(CO2(pool(X1)))) computed from a
// coarser view of X1 multiplies CO3(X1), and CO4 follows. The two halves are
// concatenated and fused by CO5 into C_out channels.
//
//        x ──split──┬── X1 ──┬── pool ─ CO2 ─ up ─┐
//                   │        ├────────────────────(+)─ sigmoid ─┐
//                   │        └── CO3 ─────────────────────────(×)── CO4 ── Y1 ─┐
//                   └── X2 ── CO1 ──────────────────────────────────────── Y2 ─┴─ concat ─ CO5 ─ y

#include <array>
#include <cstdint>
#include <string>

#include "scseg/nn_ops.hpp"
#include "scseg/rng.hpp"
#include "scseg/tensor.hpp"

namespace scseg {

struct SCConvConfig {
  std::int64_t in_channels = 8;
  std::int64_t out_channels = 8;
  std::int64_t r = 2;
  std::int64_t split_kernel = 1;
  std::array<std::int64_t, 4> co_kernels{3, 3, 3, 3};  // CO1..CO4
  std::int64_t fuse_kernel = 1;                         // CO5
  double act_slope = 0.01;
  Interp upsample = Interp::Trilinear;

  /// Throws ConfigError when channels are odd or a kernel is even.
  void validate() const;
};

template <typename T>
struct SCConvParams {
  Conv3dParams<T> split;  // groups = 2, C -> C, no norm
  ConvNormBlock<T> co1, co2, co3, co4, co5;
  std::int64_t r = 2;
  double act_slope = 0.01;
  Interp upsample = Interp::Trilinear;

  std::int64_t in_channels() const { return split.in_channels(); }
  std::int64_t out_channels() const { return co5.conv.out_channels(); }

  static SCConvParams create(const SCConvConfig& cfg, Rng& rng);
};

/// Intermediate tensors of one forward pass, for inspection in tests.
template <typename T>
struct SCConvTrace {
  Tensor<T> x1, x2, gate, calibrated, y1, y2;
};

template <typename T>
Tensor<T> sc_conv_forward(const Tensor<T>& x, const SCConvParams<T>& p,
                          SCConvTrace<T>* trace = nullptr);

template <typename T>
void append_params(ParamList<T>& out, const std::string& prefix, const SCConvParams<T>& p) {
  append_params(out, prefix + ".split", p.split);
  append_params(out, prefix + ".co1", p.co1);
  append_params(out, prefix + ".co2", p.co2);
  append_params(out, prefix + ".co3", p.co3);
  append_params(out, prefix + ".co4", p.co4);
  append_params(out, prefix + ".co5", p.co5);
}

/// Closed-form scalar parameter count of a module built from `cfg`.
std::int64_t sc_conv_param_count(const SCConvConfig& cfg);

}  // namespace scseg
