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

#include <cstdint>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scseg::parallel {

/// In deterministic mode every reduction uses a fixed, thread-count
/// independent summation order. Kernels that only write disjoint outputs are
/// deterministic either way.
void set_deterministic(bool on);
bool deterministic();

int max_threads();

// Work below this many elements stays on the calling thread.
inline constexpr std::int64_t kMinParallelWork = 1 << 14;

template <typename F>
void parallel_for(std::int64_t n, F&& body, std::int64_t work_per_item = 1) {
#pragma omp parallel for schedule(static) if (n * work_per_item >= kMinParallelWork && n > 1)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

/// Sum in double precision. Deterministic mode accumulates fixed-size chunks
/// and folds them in index order; otherwise an OpenMP reduction is used.
template <typename T>
double sum(std::span<const T> values) {
  constexpr std::int64_t kChunk = 4096;
  const auto n = static_cast<std::int64_t>(values.size());
  if (n <= kChunk) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  if (!deterministic()) {
    double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, [&](std::int64_t c) {
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += values[i];
    partial[c] = s;
  }, kChunk);
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace scseg::parallel
