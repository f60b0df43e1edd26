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

// Run configuration: one JSON document, every field optional.
//
//   {
//     "seed": 42, "deterministic": false,
//     "data_dir": "data", "out_dir": "runs", "checkpoint": "",
//     "network": { "variant": "baseline", "depth": 3, "base_channels": 8,
//                  "max_channels": 320, "convs_per_stage": 2,
//                  "deep_supervision_heads": 3, "patch_size": 32,
//                  "act_slope": 0.01, "sc_r": 2, "sc_kernel": 3,
//                  "sc_upsample": "trilinear" },
//     "train":   { "lr0": 0.01, "momentum": 0.99, "poly_exponent": 0.9,
//                  "epochs": 25, "batches_per_epoch": 40, "batch_size": 2,
//                  "eval_every": 5, "overlap": 0.5, "foreground_prob": 0.5 },
//     "phantom": { "grid": 48, "num_cases": 80, "train_fraction": 0.8,
//                  "wt_radius_min": 9, "wt_radius_max": 13,
//                  "tc_fraction": 0.65, "ncr_fraction": 0.35,
//                  "deformation": 0.15, "brain_fraction": 0.42,
//                  "center_jitter": 0.12, "noise_std": 0.08,
//                  "contrast_gap": 0.5,
//                  "means": { "brain": [...4], "ed": [...], "ncr": [...], "et": [...] } }
//   }
//
// Unknown keys are rejected with ConfigError. The top-level seed drives
// phantom generation, network initialization and batch sampling.

#include <string>

#include "scseg/data.hpp"
#include "scseg/trainer.hpp"
#include "scseg/unet.hpp"

namespace scseg {

struct RunConfig {
  std::uint64_t seed = 42;
  bool deterministic = false;
  std::string data_dir = "data";
  std::string out_dir = "runs";
  std::string checkpoint;
  UNetConfig network;
  TrainConfig train;
  PhantomSpec phantom;

  /// Copies `seed` into the train and phantom sections.
  void sync_seed();
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& cfg);

}  // namespace scseg
