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

#include <utility>

#include "scseg/tensor.hpp"

namespace scseg {

// Same-shape elementwise arithmetic. No broadcasting.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// Logistic function, evaluated in the overflow-free two-branch form.
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

/// Concatenates along axis 1; `a` fills the leading channels.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Channels [0, k) and [k, C).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::int64_t k);

/// Sum of all elements as a shape-(1) tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

/// Records the sign pattern of every leaky_relu input while active.
///
/// A finite-difference probe that flips any of those signs has straddled the
/// kink at zero, where the central difference is not an estimate of the
/// derivative. Gradient checks use this to detect and shrink such steps.
class KinkMonitor {
 public:
  enum class Mode { Record, Compare };

  explicit KinkMonitor(Mode mode);
  ~KinkMonitor();
  KinkMonitor(const KinkMonitor&) = delete;
  KinkMonitor& operator=(const KinkMonitor&) = delete;

  /// Switch an existing monitor to compare against what it recorded.
  void compare_against_recording();
  bool crossed() const { return crossed_; }

  void observe_sign(bool non_negative);

  static KinkMonitor* active();

 private:
  Mode mode_;
  std::vector<bool> signs_;
  std::size_t cursor_ = 0;
  bool crossed_ = false;
  KinkMonitor* previous_;
};

}  // namespace scseg
