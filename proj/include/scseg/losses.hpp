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

// Region losses on [B, 3, D, H, W] tensors. Targets are constant 0/1 tensors.

#include <span>
#include <vector>

#include "scseg/regions.hpp"
#include "scseg/tensor.hpp"

namespace scseg {

inline constexpr double kDiceSmooth = 1e-5;
inline constexpr double kBceClamp = 1e-7;

/// Stacks masks into a [B, 3, D, H, W] tensor of zeros and ones.
template <typename T>
Tensor<T> masks_to_tensor(std::span<const RegionMasks> masks);

/// 2x max-pooling applied `levels` times to a 0/1 target tensor, so a coarse
/// voxel is set when any voxel it covers is set.
template <typename T>
Tensor<T> downsample_targets(const Tensor<T>& targets, int levels);

/// 1 - mean over channels of (2 sum(p t) + s) / (sum p + sum t + s), sums
/// taken over batch and space per channel.
template <typename T>
Tensor<T> soft_dice_loss(const Tensor<T>& probs, const Tensor<T>& targets,
                         double smooth = kDiceSmooth);

/// Mean binary cross-entropy with p clamped to [eps, 1 - eps]. The clamp has
/// zero derivative outside that interval.
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, const Tensor<T>& targets, double eps = kBceClamp);

/// bce_loss(sigmoid(logits)) + soft_dice_loss(sigmoid(logits)).
template <typename T>
Tensor<T> combined_loss(const Tensor<T>& logits, const Tensor<T>& targets);

/// Halving weights normalized to sum 1: {1}, {2/3, 1/3}, {4/7, 2/7, 1/7}, ...
std::vector<double> deep_supervision_weights(std::size_t heads);

/// sum_i weights[i] * losses[i]; throws ShapeError on a count mismatch.
template <typename T>
Tensor<T> weighted_loss_sum(const std::vector<Tensor<T>>& losses, const std::vector<double>& weights);

/// Combined loss per head against 2^i max-pooled targets, weighted by
/// deep_supervision_weights. Heads are ordered finest first.
template <typename T>
Tensor<T> deep_supervision_loss(const std::vector<Tensor<T>>& head_logits,
                                const Tensor<T>& full_res_targets);

}  // namespace scseg
