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
#include "scseg/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "scseg/errors.hpp"
#include "scseg/ops.hpp"

namespace scseg {

Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f,
                                const Tensor<double>& x, double h) {
  if (!(h > 0.0)) throw ShapeError("finite_diff_grad: step must be positive");
  Tensor<double> probe = x.detach();
  auto v = probe.mutable_values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double saved = v[i];
    v[i] = saved + h;
    const double plus = f(probe);
    v[i] = saved - h;
    const double minus = f(probe);
    v[i] = saved;
    out[i] = (plus - minus) / (2.0 * h);
  }
  return Tensor<double>(x.shape(), std::move(out));
}

GradCheckReport check_gradients(const std::function<Tensor<double>()>& loss_fn,
                                std::vector<NamedTensor> wrt, const GradCheckOptions& options) {
  for (auto& p : wrt) {
    if (!p.tensor.requires_grad()) {
      throw ShapeError("check_gradients: '" + p.name + "' does not require grad");
    }
    p.tensor.zero_grad();
  }
  backward(loss_fn());

  std::vector<std::vector<double>> analytic;
  for (auto& p : wrt) {
    auto g = p.tensor.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(p.tensor.numel(), 0.0);
  }

  NoGradGuard no_grad;
  KinkMonitor monitor(KinkMonitor::Mode::Record);
  loss_fn();

  auto eval = [&](double& slot, double value) {
    slot = value;
    monitor.compare_against_recording();
    const double f = loss_fn().item();
    return std::pair{f, monitor.crossed()};
  };

  GradCheckReport report;
  std::vector<std::vector<double>> numeric(wrt.size());
  for (std::size_t g = 0; g < wrt.size(); ++g) {
    GradGroupReport group;
    group.name = wrt[g].name;
    group.elements = wrt[g].tensor.numel();
    auto values = wrt[g].tensor.mutable_values();
    numeric[g].resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double step = options.step;
      double estimate = 0.0;
      for (int attempt = 0;; ++attempt) {
        auto [plus, crossed_plus] = eval(values[i], saved + step);
        auto [minus, crossed_minus] = eval(values[i], saved - step);
        estimate = (plus - minus) / (2.0 * step);
        if ((!crossed_plus && !crossed_minus) || attempt == options.max_refinements) break;
        ++group.refined_steps;
        step *= 0.25;
      }
      values[i] = saved;
      numeric[g][i] = estimate;
    }
    report.groups.push_back(group);
  }

  double scale = options.denominator_floor;
  for (std::size_t g = 0; g < wrt.size(); ++g) {
    for (std::size_t i = 0; i < analytic[g].size(); ++i) {
      scale = std::max({scale, std::abs(analytic[g][i]), std::abs(numeric[g][i])});
    }
  }
  report.scale = scale;
  for (std::size_t g = 0; g < wrt.size(); ++g) {
    auto& group = report.groups[g];
    for (std::size_t i = 0; i < analytic[g].size(); ++i) {
      group.max_abs_error =
          std::max(group.max_abs_error, std::abs(analytic[g][i] - numeric[g][i]));
      group.max_abs_grad = std::max(group.max_abs_grad, std::abs(analytic[g][i]));
    }
    group.rel_error = group.max_abs_error / scale;
    report.max_rel_error = std::max(report.max_rel_error, group.rel_error);
  }
  for (auto& p : wrt) p.tensor.zero_grad();
  return report;
}

}  // namespace scseg
