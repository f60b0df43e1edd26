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

#include <functional>
#include <string>
#include <vector>

#include "scseg/tensor.hpp"

namespace scseg {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element.
Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f,
                                const Tensor<double>& x, double h);

using NamedTensor = NamedParam<double>;

struct GradGroupReport {
  std::string name;
  std::int64_t elements = 0;
  double max_abs_error = 0.0;
  double max_abs_grad = 0.0;
  double rel_error = 0.0;
  std::int64_t refined_steps = 0;  // probes that straddled a leaky-ReLU kink
};

struct GradCheckReport {
  std::vector<GradGroupReport> groups;
  double scale = 0.0;  // max |gradient| over all groups, floored
  double max_rel_error = 0.0;
  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

struct GradCheckOptions {
  double step = 1e-4;
  double denominator_floor = 1e-8;
  int max_refinements = 10;
};

/// Compares backward() against central differences for every element of
/// every tensor in `wrt`. `loss_fn` rebuilds the scalar loss from the current
/// values. Errors are reported relative to the largest gradient magnitude in
/// the whole check, so exactly-zero gradient groups are measured on the same
/// scale as the rest. When a probe flips the sign of any leaky-ReLU input the
/// step is quartered until it no longer does.
GradCheckReport check_gradients(const std::function<Tensor<double>()>& loss_fn,
                                std::vector<NamedTensor> wrt,
                                const GradCheckOptions& options = {});

}  // namespace scseg
