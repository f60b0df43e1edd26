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

// Named 64-bit gradient checks over small random instances of every
// differentiable building block, the SC-Conv module and a tiny network.
// Each scope draws inputs in [-1, 1] and differentiates a random linear
// functional of the output, so no gradient vanishes by symmetry.

#include <cstdint>
#include <string>
#include <vector>

#include "scseg/gradcheck.hpp"

namespace scseg {

inline constexpr double kGradCheckTolerance = 1e-5;

/// Individual primitives, then "scconv" and "unet-tiny".
const std::vector<std::string>& gradcheck_scopes();

/// The primitive scopes only (everything except scconv and unet-tiny).
std::vector<std::string> gradcheck_primitive_scopes();

/// Throws ConfigError for an unknown scope.
GradCheckReport run_gradcheck_scope(const std::string& scope, std::uint64_t seed = 7);

}  // namespace scseg
