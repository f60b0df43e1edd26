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

// Synthetic four-modality tumor phantoms, their on-disk format, and the
// volume preprocessing used for training and inference.
//
// On-disk case = three files in one directory:
//   <id>.vol.json  header (JSON): magic, format_version, case_id, extents
//                  [D, H, W], channels, intensity_file + intensity_type
//                  "f32le", label_file + label_type "u8"
//   <id>.vol.raw   float32 little-endian, C order [channel, D, H, W]
//   <id>.seg.raw   uint8, C order [D, H, W]
// A dataset directory adds manifest.json with every case id and its split.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scseg/kernels.hpp"
#include "scseg/regions.hpp"

namespace scseg {

inline constexpr int kNumModalities = 4;
inline constexpr std::array<const char*, kNumModalities> kModalityNames{"T1", "T1Gd", "T2", "FLAIR"};
inline constexpr int kVolumeFormatVersion = 1;

struct CaseVolume {
  std::string case_id;
  kernels::Dims3 extents;
  std::vector<float> intensities;  // [4, D, H, W]
  LabelVolume labels;

  std::span<const float> channel(int c) const {
    const auto n = static_cast<std::size_t>(extents.volume());
    return std::span<const float>(intensities).subspan(c * n, n);
  }
};

/// Tissue classes used for intensity means; rows of PhantomSpec::means.
enum Tissue : int { kTissueBrain = 0, kTissueED = 1, kTissueNCR = 2, kTissueET = 3 };

struct PhantomSpec {
  std::int64_t grid = 48;
  double brain_fraction = 0.42;  // brain ellipsoid semi-axes / grid
  double center_jitter = 0.12;   // tumor center offset range / grid
  double wt_radius_min = 9.0;    // whole-tumor semi-axes, voxels
  double wt_radius_max = 13.0;
  double tc_fraction = 0.65;   // tumor-core boundary / WT boundary (ET rim outer edge)
  double ncr_fraction = 0.35;  // necrotic-core boundary / WT boundary (ET rim inner edge)
  double deformation = 0.15;   // amplitude of the shared radial boundary wobble
  // Mean intensity per tissue (rows: brain, ED, NCR, ET) and modality (T1, T1Gd, T2, FLAIR).
  std::array<std::array<double, kNumModalities>, 4> means{{{0.50, 0.50, 0.50, 0.50},
                                                           {0.45, 0.50, 0.90, 0.95},
                                                           {0.30, 0.20, 0.80, 0.60},
                                                           {0.45, 1.00, 0.70, 0.70}}};
  double noise_std = 0.08;
  double contrast_gap = 0.5;  // required ET - NCR mean gap on T1Gd
  std::uint64_t seed = 42;
  std::int64_t num_cases = 80;
  double train_fraction = 0.8;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

/// Deterministic in (spec, case_seed).
CaseVolume generate_phantom(const PhantomSpec& spec, std::uint64_t case_seed,
                            const std::string& case_id);

/// Per channel (x - mean) / (std + 1e-8) over all voxels of the channel.
CaseVolume zscore_normalize(const CaseVolume& v);

struct PaddingRecord {
  kernels::Dims3 before{0, 0, 0}, after{0, 0, 0};
  kernels::Dims3 original;
  bool empty() const {
    return before == kernels::Dims3{0, 0, 0} && after == kernels::Dims3{0, 0, 0};
  }
};

struct PaddedCase {
  CaseVolume volume;
  PaddingRecord record;
};

/// Zero intensities / background labels, split evenly with any odd voxel on
/// the high side, until each extent is a multiple of `divisor` and at least
/// `min_extent`.
PaddedCase pad_to_divisible(const CaseVolume& v, std::int64_t divisor, std::int64_t min_extent = 1);

/// Removes padding described by `record` from a [channels, D, H, W] buffer.
template <typename V>
std::vector<V> crop_back(const std::vector<V>& padded, std::int64_t channels,
                         kernels::Dims3 padded_extents, const PaddingRecord& record);
CaseVolume crop_back(const CaseVolume& padded, const PaddingRecord& record);

enum class PatchPolicy { RandomForeground, Center };

struct Patch {
  std::int64_t size = 0;
  std::vector<float> intensities;  // [4, s, s, s]
  std::vector<std::uint8_t> labels;  // [s, s, s]
};

/// RandomForeground: with probability `foreground_prob` the window is
/// centered on a uniformly drawn tumor voxel, otherwise placed uniformly;
/// clamped to the volume. Falls back to uniform placement when the case has
/// no tumor.
Patch extract_patch(const CaseVolume& v, std::int64_t size, PatchPolicy policy, std::uint64_t seed,
                    double foreground_prob = 0.5);

using FlipMask = std::array<bool, 3>;  // flip D, H, W

/// Each axis flipped with probability 0.5; the mask is drawn from `seed`.
FlipMask draw_flip_mask(std::uint64_t seed);
void apply_flip(Patch& patch, const FlipMask& mask);
Patch augment_flip(Patch patch, std::uint64_t seed);

void write_case(const std::filesystem::path& dir, const CaseVolume& v);

/// Reads `<dir>/<case_id>.vol.json` and its data files. Legacy label code 4
/// is mapped to 3; the number of remapped voxels goes to *remapped.
CaseVolume read_case(const std::filesystem::path& dir, const std::string& case_id,
                     std::int64_t* remapped = nullptr);

struct ManifestEntry {
  std::string case_id;
  std::string split;  // "train" or "val"
};

struct DatasetManifest {
  int format_version = kVolumeFormatVersion;
  std::uint64_t seed = 0;
  kernels::Dims3 extents;
  std::vector<ManifestEntry> cases;

  std::vector<std::string> ids(const std::string& split) const;
};

/// Seeded Fisher-Yates shuffle; the first round(n * train_fraction) shuffled
/// indices are "train", the rest "val". Returns one tag per index.
std::vector<std::string> split_cases(std::size_t n, double train_fraction, std::uint64_t seed);

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
/// Also checks that every listed case header exists.
DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Generates spec.num_cases phantoms into `dir` (in parallel), then writes
/// the manifest.
DatasetManifest generate_dataset(const PhantomSpec& spec, const std::filesystem::path& dir);

std::string case_id_for(std::int64_t index);

}  // namespace scseg
