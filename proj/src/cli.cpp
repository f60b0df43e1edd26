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
#include "scseg/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "scseg/checkpoint.hpp"
#include "scseg/config.hpp"
#include "scseg/errors.hpp"
#include "scseg/gradcheck_scopes.hpp"
#include "scseg/parallel.hpp"
#include "scseg/trainer.hpp"
#include "scseg/unet.hpp"

namespace scseg {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<std::string> out;
  std::optional<std::string> data;
  // network / train overrides
  std::optional<std::string> variant;
  std::optional<std::int64_t> epochs, batches, patch, depth, base_channels, sc_r, batch_size,
      eval_every;
  // command specific
  std::optional<std::string> checkpoint;
  std::string split = "val";
  bool oracle = false;
  std::string case_id;
  bool render = false;
  std::string scope = "all";
};

RunConfig resolve_config(const Flags& f) {
  RunConfig c = f.config ? load_run_config(*f.config) : RunConfig{};
  if (f.seed) c.seed = *f.seed;
  if (f.deterministic) c.deterministic = true;
  if (f.out) c.out_dir = *f.out;
  if (f.data) c.data_dir = *f.data;
  if (f.checkpoint) c.checkpoint = *f.checkpoint;
  if (f.variant) c.network.variant = parse_variant(*f.variant);
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.batches) c.train.batches_per_epoch = *f.batches;
  if (f.patch) c.network.patch_size = *f.patch;
  if (f.depth) c.network.depth = *f.depth;
  if (f.base_channels) c.network.base_channels = *f.base_channels;
  if (f.sc_r) c.network.sc.r = *f.sc_r;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.eval_every) c.train.eval_every = *f.eval_every;
  c.sync_seed();
  parallel::set_deterministic(c.deterministic);
  return c;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError(DataError::Kind::Io, "cannot create directory " + dir.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw DataError(DataError::Kind::Io, "cannot write " + path.string());
}

std::vector<CaseVolume> load_split(const fs::path& dir, const DatasetManifest& m,
                                   const std::string& split, bool normalize) {
  const auto ids = m.ids(split);
  if (ids.empty()) {
    throw DataError(DataError::Kind::Missing, "no '" + split + "' cases in " + dir.string());
  }
  std::vector<CaseVolume> cases;
  cases.reserve(ids.size());
  for (const auto& id : ids) {
    CaseVolume v = read_case(dir, id);
    cases.push_back(normalize ? zscore_normalize(v) : std::move(v));
  }
  return cases;
}

fs::path checkpoint_path(const RunConfig& c) {
  return c.checkpoint.empty() ? fs::path(c.out_dir) / "final.ckpt" : fs::path(c.checkpoint);
}

Network<float> load_network(const RunConfig& c) {
  c.network.validate();
  Network<float> net = build_network<float>(c.network, c.seed);
  restore(load_checkpoint(checkpoint_path(c)), net.params);
  return net;
}

int cmd_gen_data(const Flags& f, std::ostream& out) {
  RunConfig c = resolve_config(f);
  const fs::path dir = f.out ? fs::path(*f.out) : fs::path(c.data_dir);
  c.phantom.validate();
  ensure_dir(dir);
  const DatasetManifest m = generate_dataset(c.phantom, dir);
  out << "wrote " << m.cases.size() << " cases (" << m.ids("train").size() << " train, "
      << m.ids("val").size() << " val) to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  c.network.validate();
  c.train.validate();
  const fs::path data(c.data_dir);
  const DatasetManifest m = read_manifest(data);
  const auto train = load_split(data, m, "train", true);
  const auto val = load_split(data, m, "val", true);

  const fs::path dir(c.out_dir);
  ensure_dir(dir);
  write_text(dir / "run_config.json", dump_run_config(c));
  std::ofstream log(dir / "log.jsonl", std::ios::binary);
  if (!log) throw DataError(DataError::Kind::Io, "cannot write " + (dir / "log.jsonl").string());

  Network<float> net = build_network<float>(c.network, c.seed);
  out << "training " << to_string(c.network.variant) << " (" << parameter_count(net)
      << " parameters) on " << train.size() << " cases, validating on " << val.size() << "\n";
  TrainOutputs outputs;
  outputs.log = &log;
  outputs.checkpoint_dir = dir;
  outputs.log_time = !c.deterministic;
  const TrainResult r = train_loop(net, train, val, c.train, outputs);
  const EpochRecord& last = r.records.back();
  char line[160];
  std::snprintf(line, sizeof line, "final loss %.5f; best mean val Dice %.4f at epoch %lld\n",
                last.mean_loss, r.best_val_dice, static_cast<long long>(r.best_epoch));
  out << line;
  if (last.val_dice) {
    std::snprintf(line, sizeof line, "final val Dice ET %.4f TC %.4f WT %.4f\n", (*last.val_dice)[0],
                  (*last.val_dice)[1], (*last.val_dice)[2]);
    out << line;
  }
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const fs::path data(c.data_dir);
  const DatasetManifest m = read_manifest(data);
  DiceReport report;
  std::string label;
  if (f.oracle) {
    const auto cases = load_split(data, m, f.split, false);
    std::vector<CaseDice> scores;
    for (const auto& v : cases) {
      const RegionMasks gt = regions_from_labels(v.labels);
      scores.push_back(score_case(v.case_id, gt, gt));
    }
    report = aggregate_report(std::move(scores));
    label = "oracle";
  } else {
    const Network<float> net = load_network(c);
    report = evaluate(net, load_split(data, m, f.split, true), c.train.overlap);
    label = to_string(c.network.variant);
  }
  const fs::path dir(c.out_dir);
  ensure_dir(dir);
  const std::string stem = "eval_" + f.split + (f.oracle ? "_oracle" : "");
  const std::string table = render_table(report, label);
  write_text(dir / (stem + ".txt"), table);
  write_text(dir / (stem + ".jsonl"), render_records(report, label));
  out << table;
  return kExitOk;
}

int cmd_infer(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  if (f.case_id.empty()) throw ConfigError("infer: --case is required");
  const fs::path data(c.data_dir);
  const CaseVolume raw = read_case(data, f.case_id);
  const Network<float> net = load_network(c);
  const LabelVolume pred = predict_labels(net, zscore_normalize(raw), c.train.overlap);

  const fs::path dir(c.out_dir);
  ensure_dir(dir);
  CaseVolume result = raw;
  result.case_id = raw.case_id + "_pred";
  result.labels = pred;
  write_case(dir, result);

  std::array<std::int64_t, 4> counts{};
  for (const auto l : pred.voxels) ++counts[l];
  out << "wrote " << (dir / (result.case_id + ".vol.json")).string() << "\n";
  out << "voxels NCR " << counts[kNCR] << " ED " << counts[kED] << " ET " << counts[kET] << "\n";

  if (f.render) {
    const std::int64_t z = raw.extents.d / 2;
    for (int m = 0; m < kNumModalities; ++m) {
      const fs::path p = dir / (result.case_id + "_" + kModalityNames[m] + ".ppm");
      write_text(p, render_slice_ppm(raw, pred, m, z));
      out << "rendered " << p.string() << "\n";
    }
  }
  return kExitOk;
}

int cmd_gradcheck(const Flags& f, std::ostream& out) {
  resolve_config(f);
  std::vector<std::string> scopes;
  if (f.scope == "all") {
    scopes = gradcheck_scopes();
  } else if (f.scope == "primitives") {
    scopes = gradcheck_primitive_scopes();
  } else {
    scopes = {f.scope};
  }
  bool all_passed = true;
  char line[256];
  for (const auto& scope : scopes) {
    const GradCheckReport r = run_gradcheck_scope(scope);
    for (const auto& g : r.groups) {
      std::snprintf(line, sizeof line, "  %-14s %-36s n=%-6lld max_rel_err=%.3e\n", scope.c_str(),
                    g.name.c_str(), static_cast<long long>(g.elements), g.rel_error);
      out << line;
    }
    const bool ok = r.passed(kGradCheckTolerance);
    all_passed = all_passed && ok;
    std::snprintf(line, sizeof line, "%s %s max_rel_err=%.3e (tolerance %.0e)\n", ok ? "PASS" : "FAIL",
                  scope.c_str(), r.max_rel_error, kGradCheckTolerance);
    out << line;
  }
  return all_passed ? kExitOk : kExitNumeric;
}

int cmd_params(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  std::int64_t baseline = 0;
  char line[160];
  std::snprintf(line, sizeof line, "%-9s %12s %12s\n", "variant", "params", "delta");
  out << line;
  for (const VariantId v : {VariantId::Baseline, VariantId::M1, VariantId::M2, VariantId::M3}) {
    UNetConfig cfg = c.network;
    cfg.variant = v;
    cfg.validate();
    const Network<float> net = build_network<float>(cfg, c.seed);
    const std::int64_t n = parameter_count(net);
    if (v == VariantId::Baseline) baseline = n;
    std::snprintf(line, sizeof line, "%-9s %12lld %+12lld\n", to_string(v).c_str(),
                  static_cast<long long>(n), static_cast<long long>(n - baseline));
    out << line;
    if (v == VariantId::M2) {
      std::int64_t skip_total = 0;
      for (const auto& p : net.params) {
        if (p.name.rfind("skip", 0) == 0) skip_total += p.tensor.numel();
      }
      std::snprintf(line, sizeof line, "  (M2 skip SC modules: %lld parameters)\n",
                    static_cast<long long>(skip_total));
      out << line;
    }
  }
  return kExitOk;
}

}  // namespace

Rgb overlay_color(std::uint8_t label) {
  switch (label) {
    case kNCR: return {230, 40, 40};
    case kED: return {40, 200, 70};
    case kET: return {250, 220, 30};
    default: return {0, 0, 0};
  }
}

std::string render_slice_ppm(const CaseVolume& v, const LabelVolume& labels, int modality,
                             std::int64_t z) {
  const auto [d, h, w] = v.extents;
  if (modality < 0 || modality >= kNumModalities || z < 0 || z >= d) {
    throw ShapeError("render: slice out of range");
  }
  if (!(labels.extents == v.extents)) throw ShapeError("render: label geometry differs from volume");
  const auto channel = v.channel(modality);
  const std::size_t base = static_cast<std::size_t>(z * h * w);
  const auto slice = channel.subspan(base, static_cast<std::size_t>(h * w));
  const auto [lo_it, hi_it] = std::minmax_element(slice.begin(), slice.end());
  const float lo = *lo_it, range = std::max(*hi_it - *lo_it, 1e-12f);

  std::ostringstream s;
  s << "P6\n" << w << " " << h << "\n255\n";
  for (std::int64_t i = 0; i < h * w; ++i) {
    const double g = 255.0 * (slice[i] - lo) / range;
    const std::uint8_t label = labels.voxels[base + i];
    for (int k = 0; k < 3; ++k) {
      const double px = label == kBackground ? g : 0.5 * g + 0.5 * overlay_color(label)[k];
      s.put(static_cast<char>(std::lround(std::clamp(px, 0.0, 255.0))));
    }
  }
  return s.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Volumetric tumor segmentation with self-calibrated convolutions", "scseg"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "Seed for data, initialization and sampling");
  app.add_flag("--deterministic", f.deterministic, "Fixed-order reductions");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--data", f.data, "Dataset directory");

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic phantom dataset");
  auto* train = app.add_subcommand("train", "Train one network variant");
  auto* eval = app.add_subcommand("eval", "Dice report for a checkpoint");
  auto* infer = app.add_subcommand("infer", "Predict labels for one case");
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  auto* params = app.add_subcommand("params", "Parameter counts per variant");

  for (auto* sub : {train, eval, infer, params}) {
    sub->add_option("--variant", f.variant, "baseline|m1|m2|m3");
    sub->add_option("--patch", f.patch, "Patch edge length");
    sub->add_option("--depth", f.depth, "Resolution levels");
    sub->add_option("--base-channels", f.base_channels, "Channels at the finest level");
    sub->add_option("--sc-r", f.sc_r, "SC-Conv pooling factor");
  }
  train->add_option("--epochs", f.epochs);
  train->add_option("--batches", f.batches, "Batches per epoch");
  train->add_option("--batch-size", f.batch_size);
  train->add_option("--eval-every", f.eval_every);
  for (auto* sub : {eval, infer}) sub->add_option("--checkpoint", f.checkpoint);
  eval->add_option("--split", f.split)->check(CLI::IsMember({"train", "val"}));
  eval->add_flag("--oracle", f.oracle, "Score ground truth against itself");
  infer->add_option("--case", f.case_id)->required();
  infer->add_flag("--render", f.render, "Write mid-slice overlays (PPM)");
  grad->add_option("scope", f.scope, "Scope name, 'primitives' or 'all'");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(f, out);
    if (*train) return cmd_train(f, out);
    if (*eval) return cmd_eval(f, out);
    if (*infer) return cmd_infer(f, out);
    if (*grad) return cmd_gradcheck(f, out);
    if (*params) return cmd_params(f, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace scseg
