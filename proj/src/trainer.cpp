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
#include "scseg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>

#include "scseg/checkpoint.hpp"
#include "scseg/errors.hpp"
#include "scseg/losses.hpp"
#include "scseg/rng.hpp"

namespace scseg {

using kernels::Dims3;

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0, 1)");
  if (!(poly_exponent >= 0.0)) throw ConfigError("train: poly_exponent must be >= 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batches_per_epoch < 1) throw ConfigError("train: batches_per_epoch must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (eval_every < 0) throw ConfigError("train: eval_every must be >= 0");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("train: overlap must be in [0, 1)");
  if (!(foreground_prob >= 0.0 && foreground_prob <= 1.0)) {
    throw ConfigError("train: foreground_prob must be in [0, 1]");
  }
}

double poly_lr(std::int64_t epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch > cfg.epochs) {
    throw ShapeError("poly_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(cfg.epochs) + "]");
  }
  const double frac = 1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
  return cfg.lr0 * std::pow(frac, cfg.poly_exponent);
}

template <typename T>
OptimizerState<T> OptimizerState<T>::zeros_like(const ParamList<T>& params) {
  OptimizerState s;
  for (const auto& p : params) s.velocity.emplace_back(p.tensor.numel(), T(0));
  return s;
}

template <typename T>
void sgd_nesterov_step(ParamList<T>& params, OptimizerState<T>& state, double lr, double mu) {
  if (state.velocity.size() != params.size()) {
    throw ShapeError("sgd_nesterov_step: optimizer state does not match parameter list");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = params[k].tensor;
    if (!p.has_grad()) throw NumericError("sgd_nesterov_step: no gradient for " + params[k].name);
    auto g = p.grad();
    auto w = p.mutable_values();
    auto& v = state.velocity[k];
    if (v.size() != w.size()) {
      throw ShapeError("sgd_nesterov_step: velocity size mismatch for " + params[k].name);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = static_cast<T>(mu * v[i] + g[i]);
      w[i] = static_cast<T>(w[i] - lr * (g[i] + mu * v[i]));
    }
  }
}

std::string EpochRecord::to_json(bool with_time) const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = mean_loss;
  j["lr"] = lr;
  if (val_dice) {
    j["val_dice"] = {{"et", (*val_dice)[0]}, {"tc", (*val_dice)[1]}, {"wt", (*val_dice)[2]}};
  } else {
    j["val_dice"] = nullptr;
  }
  if (with_time) j["seconds"] = seconds;
  return j.dump();
}

void save_training_checkpoint(const std::filesystem::path& path, const ParamList<float>& params,
                              const OptimizerState<float>* state) {
  auto tensors = snapshot(params);
  if (state != nullptr) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      tensors.push_back({"velocity/" + params[k].name, params[k].tensor.shape(), state->velocity[k]});
    }
  }
  save_checkpoint(path, tensors);
}

namespace {

struct Batch {
  Tensor<float> x;
  Tensor<float> targets;
};

Batch sample_batch(const std::vector<CaseVolume>& cases, const TrainConfig& cfg, std::int64_t patch,
                   Rng& sampler) {
  const std::int64_t b = cfg.batch_size;
  const std::int64_t pv = patch * patch * patch;
  std::vector<float> x;
  x.reserve(b * kNumModalities * pv);
  std::vector<RegionMasks> masks;
  for (std::int64_t k = 0; k < b; ++k) {
    const CaseVolume& v = cases[sampler.below(cases.size())];
    const std::uint64_t patch_seed = sampler.next();
    const std::uint64_t flip_seed = sampler.next();
    Patch p = augment_flip(
        extract_patch(v, patch, PatchPolicy::RandomForeground, patch_seed, cfg.foreground_prob),
        flip_seed);
    x.insert(x.end(), p.intensities.begin(), p.intensities.end());
    masks.push_back(regions_from_labels(LabelVolume{{patch, patch, patch}, std::move(p.labels)}));
  }
  return {Tensor<float>(Shape{b, kNumModalities, patch, patch, patch}, std::move(x)),
          masks_to_tensor<float>(masks)};
}

std::array<double, kNumRegions> report_means(const DiceReport& r) { return r.mean; }

}  // namespace

TrainResult train_loop(Network<float>& net, const std::vector<CaseVolume>& train,
                       const std::vector<CaseVolume>& val, const TrainConfig& cfg,
                       const TrainOutputs& out) {
  cfg.validate();
  if (train.empty()) throw DataError(DataError::Kind::Missing, "train_loop: no training cases");
  const std::int64_t patch = net.cfg.patch_size;
  Rng sampler(Rng::derive(cfg.seed, 1));
  OptimizerState<float> state = OptimizerState<float>::zeros_like(net.params);
  TrainResult result;

  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = poly_lr(epoch, cfg);
    double loss_sum = 0.0;
    for (std::int64_t b = 0; b < cfg.batches_per_epoch; ++b) {
      try {
        Batch batch = sample_batch(train, cfg, patch, sampler);
        const Tensor<float> loss = deep_supervision_loss(forward(net, batch.x), batch.targets);
        const double value = loss.item();
        if (!std::isfinite(value)) throw NumericError("loss is " + std::to_string(value));
        for (auto& p : net.params) p.tensor.zero_grad();
        backward(loss);
        sgd_nesterov_step(net.params, state, lr, cfg.momentum);
        loss_sum += value;
      } catch (const NumericError& e) {
        throw NumericError(std::string("training diverged at epoch ") + std::to_string(epoch) +
                           ", batch " + std::to_string(b) + ", lr " + std::to_string(lr) + ": " +
                           e.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.mean_loss = loss_sum / static_cast<double>(cfg.batches_per_epoch);
    const bool last = epoch + 1 == cfg.epochs;
    const bool due = cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0;
    if (!val.empty() && (due || last)) {
      const DiceReport rep = evaluate(net, val, cfg.overlap);
      rec.val_dice = report_means(rep);
      if (rep.average > result.best_val_dice) {
        result.best_val_dice = rep.average;
        result.best_epoch = epoch;
        if (!out.checkpoint_dir.empty()) {
          save_training_checkpoint(out.checkpoint_dir / "best.ckpt", net.params, &state);
        }
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.log != nullptr) {
      *out.log << rec.to_json(out.log_time) << '\n';
      out.log->flush();
    }
    result.records.push_back(rec);
  }
  if (!out.checkpoint_dir.empty()) {
    save_training_checkpoint(out.checkpoint_dir / "final.ckpt", net.params, &state);
  }
  return result;
}

std::vector<std::int64_t> window_starts(std::int64_t extent, std::int64_t patch, double overlap) {
  if (extent < patch) throw ShapeError("window_starts: extent smaller than patch");
  const auto stride = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(static_cast<double>(patch) * (1.0 - overlap))));
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0; s + patch < extent; s += stride) starts.push_back(s);
  starts.push_back(extent - patch);
  return starts;
}

std::vector<float> sliding_window_infer(const Network<float>& net, const CaseVolume& v,
                                        double overlap) {
  const std::int64_t patch = net.cfg.patch_size;
  const std::int64_t regions = net.cfg.num_regions;
  const PaddedCase padded = pad_to_divisible(v, 1, patch);
  const CaseVolume& pv = padded.volume;
  const Dims3 e = pv.extents;
  const std::int64_t n = e.volume();
  const std::int64_t wv = patch * patch * patch;

  std::vector<double> sum(regions * n, 0.0);
  std::vector<std::int32_t> count(n, 0);
  NoGradGuard no_grad;
  for (const std::int64_t z0 : window_starts(e.d, patch, overlap))
    for (const std::int64_t y0 : window_starts(e.h, patch, overlap))
      for (const std::int64_t x0 : window_starts(e.w, patch, overlap)) {
        std::vector<float> x(kNumModalities * wv);
        for (int c = 0; c < kNumModalities; ++c)
          for (std::int64_t z = 0; z < patch; ++z)
            for (std::int64_t y = 0; y < patch; ++y) {
              const float* src = pv.intensities.data() + c * n + ((z0 + z) * e.h + y0 + y) * e.w + x0;
              std::copy(src, src + patch, x.data() + c * wv + (z * patch + y) * patch);
            }
        const auto heads =
            forward(net, Tensor<float>(Shape{1, kNumModalities, patch, patch, patch}, std::move(x)));
        auto logits = heads[0].values();
        for (std::int64_t z = 0; z < patch; ++z)
          for (std::int64_t y = 0; y < patch; ++y)
            for (std::int64_t xx = 0; xx < patch; ++xx) {
              const std::int64_t dst = ((z0 + z) * e.h + y0 + y) * e.w + x0 + xx;
              const std::int64_t src = (z * patch + y) * patch + xx;
              for (std::int64_t r = 0; r < regions; ++r) sum[r * n + dst] += logits[r * wv + src];
              ++count[dst];
            }
      }

  std::vector<float> probs(regions * n);
  for (std::int64_t r = 0; r < regions; ++r)
    for (std::int64_t i = 0; i < n; ++i) {
      const double mean = sum[r * n + i] / count[i];
      probs[r * n + i] = static_cast<float>(1.0 / (1.0 + std::exp(-mean)));
    }
  if (padded.record.empty()) return probs;
  return crop_back(probs, regions, e, padded.record);
}

RegionMasks threshold_regions(const std::vector<float>& probs, Dims3 extents) {
  const auto n = static_cast<std::size_t>(extents.volume());
  if (probs.size() != kNumRegions * n) {
    throw ShapeError("threshold_regions: expected " + std::to_string(kNumRegions) +
                     " region channels");
  }
  RegionMasks m{extents, std::vector<std::uint8_t>(probs.size())};
  for (std::size_t i = 0; i < probs.size(); ++i) m.data[i] = probs[i] > 0.5f;
  return m;
}

LabelVolume predict_labels(const Network<float>& net, const CaseVolume& v, double overlap) {
  return labels_from_regions(threshold_regions(sliding_window_infer(net, v, overlap), v.extents));
}

DiceReport evaluate(const Network<float>& net, const std::vector<CaseVolume>& cases, double overlap) {
  if (cases.empty()) throw ShapeError("evaluate: no cases");
  if (net.cfg.num_regions != kNumRegions) {
    throw ShapeError("evaluate: network must emit " + std::to_string(kNumRegions) + " regions");
  }
  std::vector<CaseDice> scores;
  for (const auto& v : cases) {
    const RegionMasks pred = regions_from_labels(predict_labels(net, v, overlap));
    scores.push_back(score_case(v.case_id, pred, regions_from_labels(v.labels)));
  }
  return aggregate_report(std::move(scores));
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void sgd_nesterov_step<float>(ParamList<float>&, OptimizerState<float>&, double, double);
template void sgd_nesterov_step<double>(ParamList<double>&, OptimizerState<double>&, double, double);

}  // namespace scseg
