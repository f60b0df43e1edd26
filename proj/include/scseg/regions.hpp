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

// Tumor classes, the nested ET/TC/WT regions derived from them, and hard
// Dice scoring with per-region aggregation.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scseg/kernels.hpp"

namespace scseg {

enum Label : std::uint8_t { kBackground = 0, kNCR = 1, kED = 2, kET = 3 };

struct LabelVolume {
  kernels::Dims3 extents;
  std::vector<std::uint8_t> voxels;  // [D, H, W]

  /// Filled with background.
  static LabelVolume empty(kernels::Dims3 extents);
};

/// Channel order of region tensors and reports.
enum Region : int { kRegionET = 0, kRegionTC = 1, kRegionWT = 2 };
inline constexpr int kNumRegions = 3;
inline constexpr std::array<const char*, kNumRegions> kRegionNames{"ET", "TC", "WT"};

struct RegionMasks {
  kernels::Dims3 extents;
  std::vector<std::uint8_t> data;  // [3, D, H, W], values 0/1

  std::span<const std::uint8_t> channel(int region) const;
};

/// ET = {3}, TC = {1, 3}, WT = {1, 2, 3}. Throws DataError(BadLabel) naming
/// the first voxel with an unknown code.
RegionMasks regions_from_labels(const LabelVolume& labels);

/// Enforces nesting (TC |= ET, WT |= TC), then ET -> 3, TC\ET -> 1, WT\TC -> 2.
LabelVolume labels_from_regions(const RegionMasks& masks);

/// 2|P n G| / (|P| + |G|), 1.0 when both are empty. Nonzero bytes count as set.
double dice_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

struct CaseDice {
  std::string case_id;
  std::array<double, kNumRegions> dice{};  // ET, TC, WT
};

struct DiceReport {
  std::vector<CaseDice> cases;
  std::array<double, kNumRegions> mean{};
  std::array<double, kNumRegions> stddev{};  // population
  double average = 0.0;                      // mean of the region means
  double average_stddev = 0.0;               // population std of per-case averages
};

CaseDice score_case(const std::string& case_id, const RegionMasks& pred, const RegionMasks& gt);

/// Throws ShapeError when `cases` is empty.
DiceReport aggregate_report(std::vector<CaseDice> cases);

/// Percentages with two decimals; std written as a "_{x.xx}" subscript.
///
///   label      ET            TC            WT            AVG
///   baseline   84.12_{3.10}  ...
std::string render_table(const DiceReport& report, const std::string& label);

/// One JSON object per line: every case, then a summary record.
std::string render_records(const DiceReport& report, const std::string& label);

}  // namespace scseg
