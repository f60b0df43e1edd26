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

#include <array>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scseg/data.hpp"
#include "scseg/regions.hpp"
#include "scseg/unet.hpp"

namespace scseg {

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.99;
  double poly_exponent = 0.9;
  std::int64_t epochs = 25;
  std::int64_t batches_per_epoch = 40;
  std::int64_t batch_size = 2;
  std::uint64_t seed = 42;
  std::int64_t eval_every = 5;
  double overlap = 0.5;          // sliding-window overlap fraction
  double foreground_prob = 0.5;  // patch sampling bias toward tumor voxels

  void validate() const;
};

/// lr0 * (1 - epoch / epochs)^exponent; throws ShapeError outside [0, epochs].
double poly_lr(std::int64_t epoch, const TrainConfig& cfg);

template <typename T>
struct OptimizerState {
  std::vector<std::vector<T>> velocity;  // one per registered parameter, same order

  static OptimizerState zeros_like(const ParamList<T>& params);
};

/// v <- mu v + g;  p <- p - lr (g + mu v). Throws NumericError naming a
/// parameter without gradient.
template <typename T>
void sgd_nesterov_step(ParamList<T>& params, OptimizerState<T>& state, double lr, double mu);

struct EpochRecord {
  std::int64_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  std::optional<std::array<double, kNumRegions>> val_dice;  // ET, TC, WT means
  double seconds = 0.0;

  /// One JSON object; `seconds` is left out unless `with_time`.
  std::string to_json(bool with_time) const;
};

struct TrainOutputs {
  std::ostream* log = nullptr;           // receives one JSON line per epoch
  std::filesystem::path checkpoint_dir;  // final.ckpt / best.ckpt; empty disables
  bool log_time = true;
};

struct TrainResult {
  std::vector<EpochRecord> records;
  double best_val_dice = -1.0;  // mean of ET/TC/WT means at the best evaluation
  std::int64_t best_epoch = -1;
};

/// Cases must already be z-score normalized. Throws NumericError carrying
/// epoch, batch and learning rate when the loss turns non-finite.
TrainResult train_loop(Network<float>& net, const std::vector<CaseVolume>& train,
                       const std::vector<CaseVolume>& val, const TrainConfig& cfg,
                       const TrainOutputs& out = {});

/// Region probabilities [3, D, H, W] for a normalized case: windows of the
/// network's patch size at stride patch * (1 - overlap), finest-head logits
/// averaged uniformly over covering windows, then sigmoid.
std::vector<float> sliding_window_infer(const Network<float>& net, const CaseVolume& v,
                                        double overlap);

/// Window start offsets along one axis of extent e >= patch.
std::vector<std::int64_t> window_starts(std::int64_t extent, std::int64_t patch, double overlap);

/// Thresholds probabilities at 0.5 into nested region masks.
RegionMasks threshold_regions(const std::vector<float>& probs, kernels::Dims3 extents);

LabelVolume predict_labels(const Network<float>& net, const CaseVolume& v, double overlap);

DiceReport evaluate(const Network<float>& net, const std::vector<CaseVolume>& cases, double overlap);

/// Model tensors plus optimizer velocities under "velocity/<name>".
void save_training_checkpoint(const std::filesystem::path& path, const ParamList<float>& params,
                              const OptimizerState<float>* state);

}  // namespace scseg
