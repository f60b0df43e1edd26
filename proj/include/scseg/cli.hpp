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

// The `scseg` command line: gen-data, train, eval, infer, gradcheck and
// params. Exposed as a function so tests can drive it in-process.

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "scseg/data.hpp"
#include "scseg/regions.hpp"

namespace scseg {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

using Rgb = std::array<std::uint8_t, 3>;

/// Overlay colour for a label code; background has none and returns black.
Rgb overlay_color(std::uint8_t label);

/// Binary PPM (P6) of the axial slice z of one modality, grey levels scaled
/// to the slice's intensity range, labels blended at 50%.
std::string render_slice_ppm(const CaseVolume& v, const LabelVolume& labels, int modality,
                             std::int64_t z);

}  // namespace scseg
