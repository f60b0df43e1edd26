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
#include "scseg/regions.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "scseg/errors.hpp"

namespace scseg {

LabelVolume LabelVolume::empty(kernels::Dims3 extents) {
  return {extents, std::vector<std::uint8_t>(extents.volume(), kBackground)};
}

std::span<const std::uint8_t> RegionMasks::channel(int region) const {
  const auto n = static_cast<std::size_t>(extents.volume());
  return std::span<const std::uint8_t>(data).subspan(region * n, n);
}

RegionMasks regions_from_labels(const LabelVolume& labels) {
  const auto n = static_cast<std::size_t>(labels.extents.volume());
  if (labels.voxels.size() != n) throw ShapeError("regions_from_labels: size/extent mismatch");
  RegionMasks m{labels.extents, std::vector<std::uint8_t>(3 * n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t l = labels.voxels[i];
    if (l > kET) {
      const auto w = static_cast<std::int64_t>(i);
      const auto hw = labels.extents.h * labels.extents.w;
      throw DataError(DataError::Kind::BadLabel,
                      "unknown label code " + std::to_string(l) + " at voxel (" +
                          std::to_string(w / hw) + ", " +
                          std::to_string(w / labels.extents.w % labels.extents.h) + ", " +
                          std::to_string(w % labels.extents.w) + ")");
    }
    m.data[kRegionET * n + i] = l == kET;
    m.data[kRegionTC * n + i] = l == kET || l == kNCR;
    m.data[kRegionWT * n + i] = l != kBackground;
  }
  return m;
}

LabelVolume labels_from_regions(const RegionMasks& masks) {
  const auto n = static_cast<std::size_t>(masks.extents.volume());
  if (masks.data.size() != 3 * n) throw ShapeError("labels_from_regions: size/extent mismatch");
  LabelVolume out = LabelVolume::empty(masks.extents);
  for (std::size_t i = 0; i < n; ++i) {
    const bool et = masks.data[kRegionET * n + i] != 0;
    const bool tc = et || masks.data[kRegionTC * n + i] != 0;
    const bool wt = tc || masks.data[kRegionWT * n + i] != 0;
    out.voxels[i] = et ? kET : tc ? kNCR : wt ? kED : kBackground;
  }
  return out;
}

double dice_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("dice_score: masks have " + std::to_string(pred.size()) + " and " +
                     std::to_string(gt.size()) + " voxels");
  }
  std::int64_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0, b = gt[i] != 0;
    p += a;
    g += b;
    both += a && b;
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

CaseDice score_case(const std::string& case_id, const RegionMasks& pred, const RegionMasks& gt) {
  if (!(pred.extents == gt.extents)) {
    throw ShapeError("score_case: prediction " + pred.extents.str() + " vs ground truth " +
                     gt.extents.str());
  }
  CaseDice c{case_id, {}};
  for (int r = 0; r < kNumRegions; ++r) c.dice[r] = dice_score(pred.channel(r), gt.channel(r));
  return c;
}

DiceReport aggregate_report(std::vector<CaseDice> cases) {
  if (cases.empty()) throw ShapeError("aggregate_report: no cases");
  DiceReport rep;
  const double n = static_cast<double>(cases.size());
  for (int r = 0; r < kNumRegions; ++r) {
    double sum = 0.0;
    for (const auto& c : cases) sum += c.dice[r];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& c : cases) sq += (c.dice[r] - mean) * (c.dice[r] - mean);
    rep.mean[r] = mean;
    rep.stddev[r] = std::sqrt(sq / n);
  }
  rep.average = (rep.mean[0] + rep.mean[1] + rep.mean[2]) / 3.0;
  double sq = 0.0;
  for (const auto& c : cases) {
    const double a = (c.dice[0] + c.dice[1] + c.dice[2]) / 3.0 - rep.average;
    sq += a * a;
  }
  rep.average_stddev = std::sqrt(sq / n);
  rep.cases = std::move(cases);
  return rep;
}

std::string render_table(const DiceReport& report, const std::string& label) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-12s %-14s %-14s %-14s %s\n", "", "ET", "TC", "WT", "AVG");
  out += buf;
  std::string cells[kNumRegions + 1];
  for (int r = 0; r <= kNumRegions; ++r) {
    const double mean = r < kNumRegions ? report.mean[r] : report.average;
    const double sd = r < kNumRegions ? report.stddev[r] : report.average_stddev;
    std::snprintf(buf, sizeof buf, "%.2f_{%.2f}", 100.0 * mean, 100.0 * sd);
    cells[r] = buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %-14s %-14s %-14s %s\n", label.c_str(), cells[0].c_str(),
                cells[1].c_str(), cells[2].c_str(), cells[3].c_str());
  out += buf;
  return out;
}

std::string render_records(const DiceReport& report, const std::string& label) {
  std::string out;
  for (const auto& c : report.cases) {
    nlohmann::ordered_json j;
    j["case_id"] = c.case_id;
    j["dice_et"] = c.dice[kRegionET];
    j["dice_tc"] = c.dice[kRegionTC];
    j["dice_wt"] = c.dice[kRegionWT];
    out += j.dump() + '\n';
  }
  nlohmann::ordered_json s;
  s["summary"] = label;
  s["cases"] = report.cases.size();
  for (int r = 0; r < kNumRegions; ++r) {
    const std::string key = r == 0 ? "et" : r == 1 ? "tc" : "wt";
    s["mean_" + key] = report.mean[r];
    s["std_" + key] = report.stddev[r];
  }
  s["mean_avg"] = report.average;
  s["std_avg"] = report.average_stddev;
  out += s.dump() + '\n';
  return out;
}

}  // namespace scseg
