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

// U-shaped encoder/decoder with deep supervision.
//
// Level l works at patch / 2^l voxels per axis with channels(l) features.
// Each encoder level runs convs_per_stage conv+norm+act blocks; levels are
// joined by a stride-2 3^3 conv+norm+act. The deepest encoder level is the
// bottleneck. Each decoder level upsamples with a 2^3 stride-2 transposed
// conv, concatenates [upsampled, skip] and runs convs_per_stage blocks.
// Logit heads (1^3 conv) sit on the finest decoder levels, finest first; when
// more heads than decoder levels are requested the bottleneck carries the
// coarsest one.
//
// Variants:
//   Baseline  plain blocks everywhere
//   M1        every stride-1 encoder/decoder block is an SC-Conv module
//   M2        one C -> C SC-Conv module on each skip path
//   M3        M1 and M2 together

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scseg/nn_ops.hpp"
#include "scseg/sc_conv.hpp"
#include "scseg/tensor.hpp"

namespace scseg {

enum class VariantId { Baseline, M1, M2, M3 };

std::string to_string(VariantId v);
/// Accepts baseline|m1|m2|m3 (case-insensitive); throws ConfigError.
VariantId parse_variant(const std::string& name);
inline bool has_sc_blocks(VariantId v) { return v == VariantId::M1 || v == VariantId::M3; }
inline bool has_sc_skips(VariantId v) { return v == VariantId::M2 || v == VariantId::M3; }

struct UNetConfig {
  std::int64_t in_channels = 4;
  std::int64_t num_regions = 3;
  std::int64_t depth = 3;
  std::int64_t base_channels = 8;
  std::int64_t max_channels = 320;
  std::int64_t convs_per_stage = 2;
  std::int64_t deep_supervision_heads = 3;
  VariantId variant = VariantId::Baseline;
  SCConvConfig sc;  // r, kernels, slope and upsampling; channel fields are ignored
  std::int64_t patch_size = 32;
  double act_slope = 0.01;

  std::int64_t channels(std::int64_t level) const;
  std::int64_t extent(std::int64_t level) const { return patch_size >> level; }
  std::int64_t head_count() const;
  /// Throws ConfigError naming the offending level.
  void validate() const;
};

template <typename T>
struct StageBlock {
  std::optional<ConvNormBlock<T>> plain;
  std::optional<SCConvParams<T>> sc;
};

template <typename T>
struct Network {
  UNetConfig cfg;
  std::vector<std::vector<StageBlock<T>>> encoder;  // [level][block]
  std::vector<ConvNormBlock<T>> down;                // down[l - 1] enters level l
  std::vector<std::optional<SCConvParams<T>>> skip;  // [level], depth - 1 entries
  std::vector<ConvTranspose3dParams<T>> up;          // up[l]: level l + 1 -> l
  std::vector<std::vector<StageBlock<T>>> decoder;   // [level][block], depth - 1 levels
  std::vector<Conv3dParams<T>> heads;                // finest first
  ParamList<T> params;                               // every trainable tensor once
};

template <typename T>
Network<T> build_network(const UNetConfig& cfg, std::uint64_t seed);

template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> skips;  // skip features as concatenated, after any SC module
};

/// Returns head logits, finest first: head i is [B, num_regions, s/2^i ...].
template <typename T>
std::vector<Tensor<T>> forward(const Network<T>& net, const Tensor<T>& x,
                               ForwardTrace<T>* trace = nullptr);

template <typename T>
std::int64_t parameter_count(const Network<T>& net);

}  // namespace scseg
