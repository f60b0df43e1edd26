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
#include "scseg/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "scseg/errors.hpp"

namespace scseg {

using json = nlohmann::json;

namespace {

using Handler = std::function<void(const json&)>;

// Dispatches every key of `obj` to its handler; unknown keys are errors.
void visit(const json& obj, const std::string& section, const std::map<std::string, Handler>& handlers) {
  if (!obj.is_object()) {
    throw ConfigError("config: " + (section.empty() ? std::string("document") : section) +
                      " must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    const std::string path = section.empty() ? key : section + "." + key;
    auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("config: unknown key '" + path + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + path + "' (" + e.what() + ")");
    }
  }
}

template <typename V>
Handler set(V& dst) {
  return [&dst](const json& v) { dst = v.get<V>(); };
}

Handler set_means(std::array<double, kNumModalities>& row) {
  return [&row](const json& v) {
    const auto vals = v.get<std::vector<double>>();
    if (vals.size() != kNumModalities) throw ConfigError("config: means rows need 4 values");
    std::copy(vals.begin(), vals.end(), row.begin());
  };
}

}  // namespace

void RunConfig::sync_seed() {
  train.seed = seed;
  phantom.seed = seed;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  RunConfig c;
  UNetConfig& n = c.network;
  TrainConfig& t = c.train;
  PhantomSpec& p = c.phantom;

  const std::map<std::string, Handler> network{
      {"variant", [&n](const json& v) { n.variant = parse_variant(v.get<std::string>()); }},
      {"depth", set(n.depth)},
      {"base_channels", set(n.base_channels)},
      {"max_channels", set(n.max_channels)},
      {"convs_per_stage", set(n.convs_per_stage)},
      {"deep_supervision_heads", set(n.deep_supervision_heads)},
      {"patch_size", set(n.patch_size)},
      {"act_slope",
       [&n](const json& v) {
         n.act_slope = v.get<double>();
         n.sc.act_slope = n.act_slope;
       }},
      {"sc_r", set(n.sc.r)},
      {"sc_kernel", [&n](const json& v) { n.sc.co_kernels.fill(v.get<std::int64_t>()); }},
      {"sc_upsample",
       [&n](const json& v) {
         const auto s = v.get<std::string>();
         if (s == "trilinear") n.sc.upsample = Interp::Trilinear;
         else if (s == "nearest") n.sc.upsample = Interp::Nearest;
         else throw ConfigError("config: network.sc_upsample must be trilinear or nearest");
       }},
  };
  const std::map<std::string, Handler> train{
      {"lr0", set(t.lr0)},
      {"momentum", set(t.momentum)},
      {"poly_exponent", set(t.poly_exponent)},
      {"epochs", set(t.epochs)},
      {"batches_per_epoch", set(t.batches_per_epoch)},
      {"batch_size", set(t.batch_size)},
      {"eval_every", set(t.eval_every)},
      {"overlap", set(t.overlap)},
      {"foreground_prob", set(t.foreground_prob)},
  };
  const std::map<std::string, Handler> means{
      {"brain", set_means(p.means[kTissueBrain])},
      {"ed", set_means(p.means[kTissueED])},
      {"ncr", set_means(p.means[kTissueNCR])},
      {"et", set_means(p.means[kTissueET])},
  };
  const std::map<std::string, Handler> phantom{
      {"grid", set(p.grid)},
      {"num_cases", set(p.num_cases)},
      {"train_fraction", set(p.train_fraction)},
      {"wt_radius_min", set(p.wt_radius_min)},
      {"wt_radius_max", set(p.wt_radius_max)},
      {"tc_fraction", set(p.tc_fraction)},
      {"ncr_fraction", set(p.ncr_fraction)},
      {"deformation", set(p.deformation)},
      {"brain_fraction", set(p.brain_fraction)},
      {"center_jitter", set(p.center_jitter)},
      {"noise_std", set(p.noise_std)},
      {"contrast_gap", set(p.contrast_gap)},
      {"means", [&means](const json& v) { visit(v, "phantom.means", means); }},
  };
  const std::map<std::string, Handler> top{
      {"seed", set(c.seed)},
      {"deterministic", set(c.deterministic)},
      {"data_dir", set(c.data_dir)},
      {"out_dir", set(c.out_dir)},
      {"checkpoint", set(c.checkpoint)},
      {"network", [&network](const json& v) { visit(v, "network", network); }},
      {"train", [&train](const json& v) { visit(v, "train", train); }},
      {"phantom", [&phantom](const json& v) { visit(v, "phantom", phantom); }},
  };
  visit(doc, "", top);
  c.sync_seed();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["checkpoint"] = c.checkpoint;
  const UNetConfig& n = c.network;
  j["network"] = {{"variant", to_string(n.variant)},
                  {"depth", n.depth},
                  {"base_channels", n.base_channels},
                  {"max_channels", n.max_channels},
                  {"convs_per_stage", n.convs_per_stage},
                  {"deep_supervision_heads", n.deep_supervision_heads},
                  {"patch_size", n.patch_size},
                  {"act_slope", n.act_slope},
                  {"sc_r", n.sc.r},
                  {"sc_kernel", n.sc.co_kernels[0]},
                  {"sc_upsample", n.sc.upsample == Interp::Trilinear ? "trilinear" : "nearest"}};
  const TrainConfig& t = c.train;
  j["train"] = {{"lr0", t.lr0},
                {"momentum", t.momentum},
                {"poly_exponent", t.poly_exponent},
                {"epochs", t.epochs},
                {"batches_per_epoch", t.batches_per_epoch},
                {"batch_size", t.batch_size},
                {"eval_every", t.eval_every},
                {"overlap", t.overlap},
                {"foreground_prob", t.foreground_prob}};
  const PhantomSpec& p = c.phantom;
  j["phantom"] = {{"grid", p.grid},
                  {"num_cases", p.num_cases},
                  {"train_fraction", p.train_fraction},
                  {"wt_radius_min", p.wt_radius_min},
                  {"wt_radius_max", p.wt_radius_max},
                  {"tc_fraction", p.tc_fraction},
                  {"ncr_fraction", p.ncr_fraction},
                  {"deformation", p.deformation},
                  {"brain_fraction", p.brain_fraction},
                  {"center_jitter", p.center_jitter},
                  {"noise_std", p.noise_std},
                  {"contrast_gap", p.contrast_gap},
                  {"means",
                   {{"brain", p.means[kTissueBrain]},
                    {"ed", p.means[kTissueED]},
                    {"ncr", p.means[kTissueNCR]},
                    {"et", p.means[kTissueET]}}}};
  return j.dump(2) + "\n";
}

}  // namespace scseg
