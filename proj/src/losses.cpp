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
#include "scseg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "scseg/errors.hpp"
#include "scseg/ops.hpp"

namespace scseg {

namespace {

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(op) + ": prediction " + a.shape().str() + " vs target " +
                     b.shape().str());
  }
  if (a.shape().rank() < 2) throw ShapeError(std::string(op) + ": expected [B, C, ...]");
}

}  // namespace

template <typename T>
Tensor<T> masks_to_tensor(std::span<const RegionMasks> masks) {
  if (masks.empty()) throw ShapeError("masks_to_tensor: no masks");
  const kernels::Dims3 e = masks[0].extents;
  std::vector<T> v;
  v.reserve(masks.size() * 3 * e.volume());
  for (const auto& m : masks) {
    if (!(m.extents == e)) throw ShapeError("masks_to_tensor: extents differ within batch");
    for (const std::uint8_t b : m.data) v.push_back(b ? T(1) : T(0));
  }
  return Tensor<T>(Shape{static_cast<std::int64_t>(masks.size()), kNumRegions, e.d, e.h, e.w},
                   std::move(v));
}

template <typename T>
Tensor<T> downsample_targets(const Tensor<T>& targets, int levels) {
  if (targets.shape().rank() != 5) throw ShapeError("downsample_targets: expected rank 5");
  std::vector<T> cur(targets.values().begin(), targets.values().end());
  std::int64_t d = targets.shape()[2], h = targets.shape()[3], w = targets.shape()[4];
  const std::int64_t slices = targets.shape()[0] * targets.shape()[1];
  for (int l = 0; l < levels; ++l) {
    if (d % 2 || h % 2 || w % 2) {
      throw ShapeError("downsample_targets: extent not divisible by 2 at level " +
                       std::to_string(l + 1));
    }
    const std::int64_t od = d / 2, oh = h / 2, ow = w / 2;
    std::vector<T> next(slices * od * oh * ow);
    for (std::int64_t s = 0; s < slices; ++s)
      for (std::int64_t z = 0; z < od; ++z)
        for (std::int64_t y = 0; y < oh; ++y)
          for (std::int64_t x = 0; x < ow; ++x) {
            T m = cur[((s * d + 2 * z) * h + 2 * y) * w + 2 * x];
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                  m = std::max(m, cur[((s * d + 2 * z + a) * h + 2 * y + b) * w + 2 * x + c]);
            next[((s * od + z) * oh + y) * ow + x] = m;
          }
    cur = std::move(next);
    d = od;
    h = oh;
    w = ow;
  }
  return Tensor<T>(Shape{targets.shape()[0], targets.shape()[1], d, h, w}, std::move(cur));
}

template <typename T>
Tensor<T> soft_dice_loss(const Tensor<T>& probs, const Tensor<T>& targets, double smooth) {
  require_same(probs, targets, "soft_dice_loss");
  const std::int64_t batch = probs.shape()[0];
  const std::int64_t channels = probs.shape()[1];
  const std::int64_t spatial = probs.numel() / (batch * channels);
  auto p = probs.values();
  auto t = targets.values();

  // Per channel: intersection and denominator.
  std::vector<double> inter(channels, 0.0), denom(channels, 0.0);
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::int64_t base = (b * channels + c) * spatial;
      double pi = 0.0, ps = 0.0, ts = 0.0;
      for (std::int64_t i = 0; i < spatial; ++i) {
        pi += static_cast<double>(p[base + i]) * t[base + i];
        ps += p[base + i];
        ts += t[base + i];
      }
      inter[c] += pi;
      denom[c] += ps + ts;
    }
  double mean_dice = 0.0;
  for (std::int64_t c = 0; c < channels; ++c) {
    mean_dice += (2.0 * inter[c] + smooth) / (denom[c] + smooth);
  }
  mean_dice /= static_cast<double>(channels);

  return make_result<T>(
      "soft_dice_loss", Shape{1}, {static_cast<T>(1.0 - mean_dice)}, {probs, targets},
      [batch, channels, spatial, smooth, inter, denom](detail::Node<T>& self) {
        auto& np = self.inputs[0];
        if (!np->requires_grad) return;
        const auto& t = self.inputs[1]->value;
        const double g = self.grad[0];
        auto dp = np->ensure_grad();
        for (std::int64_t b = 0; b < batch; ++b)
          for (std::int64_t c = 0; c < channels; ++c) {
            const double den = denom[c] + smooth;
            const double num = 2.0 * inter[c] + smooth;
            const double k = -g / static_cast<double>(channels);
            const std::int64_t base = (b * channels + c) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) {
              dp[base + i] += static_cast<T>(k * (2.0 * t[base + i] / den - num / (den * den)));
            }
          }
      });
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, const Tensor<T>& targets, double eps) {
  require_same(probs, targets, "bce_loss");
  auto p = probs.values();
  auto t = targets.values();
  const auto n = static_cast<std::size_t>(probs.numel());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(static_cast<double>(p[i]), eps, 1.0 - eps);
    const double ti = t[i];
    total -= ti * std::log(pc) + (1.0 - ti) * std::log(1.0 - pc);
  }
  return make_result<T>(
      "bce_loss", Shape{1}, {static_cast<T>(total / static_cast<double>(n))}, {probs, targets},
      [n, eps](detail::Node<T>& self) {
        auto& np = self.inputs[0];
        if (!np->requires_grad) return;
        const auto& t = self.inputs[1]->value;
        const double g = self.grad[0] / static_cast<double>(n);
        auto dp = np->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          const double pi = np->value[i];
          if (pi < eps || pi > 1.0 - eps) continue;
          dp[i] += static_cast<T>(-g * (t[i] / pi - (1.0 - t[i]) / (1.0 - pi)));
        }
      });
}

template <typename T>
Tensor<T> combined_loss(const Tensor<T>& logits, const Tensor<T>& targets) {
  const Tensor<T> probs = sigmoid(logits);
  return add(bce_loss(probs, targets), soft_dice_loss(probs, targets));
}

std::vector<double> deep_supervision_weights(std::size_t heads) {
  std::vector<double> w(heads);
  double total = 0.0;
  for (std::size_t i = 0; i < heads; ++i) {
    w[i] = std::ldexp(1.0, -static_cast<int>(i));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

template <typename T>
Tensor<T> weighted_loss_sum(const std::vector<Tensor<T>>& losses, const std::vector<double>& weights) {
  if (losses.empty() || losses.size() != weights.size()) {
    throw ShapeError("weighted_loss_sum: " + std::to_string(losses.size()) + " losses but " +
                     std::to_string(weights.size()) + " weights");
  }
  Tensor<T> total = scale(losses[0], static_cast<T>(weights[0]));
  for (std::size_t i = 1; i < losses.size(); ++i) {
    total = add(total, scale(losses[i], static_cast<T>(weights[i])));
  }
  return total;
}

template <typename T>
Tensor<T> deep_supervision_loss(const std::vector<Tensor<T>>& head_logits,
                                const Tensor<T>& full_res_targets) {
  if (head_logits.empty()) throw ShapeError("deep_supervision_loss: no heads");
  std::vector<Tensor<T>> losses;
  Tensor<T> target = full_res_targets;
  for (std::size_t i = 0; i < head_logits.size(); ++i) {
    if (i > 0) target = downsample_targets(target, 1);
    losses.push_back(combined_loss(head_logits[i], target));
  }
  return weighted_loss_sum(losses, deep_supervision_weights(head_logits.size()));
}

#define SCSEG_INSTANTIATE(T)                                                                 \
  template Tensor<T> masks_to_tensor<T>(std::span<const RegionMasks>);                      \
  template Tensor<T> downsample_targets<T>(const Tensor<T>&, int);                          \
  template Tensor<T> soft_dice_loss<T>(const Tensor<T>&, const Tensor<T>&, double);         \
  template Tensor<T> bce_loss<T>(const Tensor<T>&, const Tensor<T>&, double);               \
  template Tensor<T> combined_loss<T>(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> weighted_loss_sum<T>(const std::vector<Tensor<T>>&,                    \
                                          const std::vector<double>&);                      \
  template Tensor<T> deep_supervision_loss<T>(const std::vector<Tensor<T>>&, const Tensor<T>&);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg
