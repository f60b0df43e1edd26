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
#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "scseg/errors.hpp"
#include "scseg/losses.hpp"
#include "scseg/ops.hpp"
#include "scseg/regions.hpp"
#include "test_util.hpp"

namespace scseg {
namespace {

using testing::random_tensor;

LabelVolume labels(kernels::Dims3 e, std::vector<std::uint8_t> v) { return {e, std::move(v)}; }

LabelVolume random_labels(Rng& rng, kernels::Dims3 e) {
  LabelVolume l = LabelVolume::empty(e);
  for (auto& v : l.voxels) v = static_cast<std::uint8_t>(rng.below(4));
  return l;
}

std::array<std::uint8_t, 3> regions_at(const RegionMasks& m, std::size_t i) {
  return {m.channel(kRegionET)[i], m.channel(kRegionTC)[i], m.channel(kRegionWT)[i]};
}

TEST(RegionsFromLabels, ClassToRegionTable) {
  const auto m = regions_from_labels(labels({1, 1, 4}, {0, 1, 2, 3}));
  EXPECT_EQ(regions_at(m, 0), (std::array<std::uint8_t, 3>{0, 0, 0}));
  EXPECT_EQ(regions_at(m, 1), (std::array<std::uint8_t, 3>{0, 1, 1}));
  EXPECT_EQ(regions_at(m, 2), (std::array<std::uint8_t, 3>{0, 0, 1}));
  EXPECT_EQ(regions_at(m, 3), (std::array<std::uint8_t, 3>{1, 1, 1}));
}

TEST(RegionsFromLabels, BackgroundGivesEmptyMasks) {
  const auto m = regions_from_labels(LabelVolume::empty({3, 3, 3}));
  for (auto v : m.data) EXPECT_EQ(v, 0);
}

TEST(RegionsFromLabels, UnknownCodeNamesVoxel) {
  auto l = LabelVolume::empty({2, 2, 2});
  l.voxels[5] = 7;  // z=1, y=0, x=1
  try {
    regions_from_labels(l);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataError::Kind::BadLabel);
    EXPECT_NE(std::string(e.what()).find("(1, 0, 1)"), std::string::npos) << e.what();
  }
}

TEST(LabelsFromRegions, NestingForcesEnhancingLabel) {
  RegionMasks m{{1, 1, 1}, {1, 0, 0}};
  EXPECT_EQ(labels_from_regions(m).voxels[0], kET);
}

TEST(LabelsFromRegions, EmptyMasksGiveBackground) {
  RegionMasks m{{2, 2, 2}, std::vector<std::uint8_t>(24, 0)};
  for (auto v : labels_from_regions(m).voxels) EXPECT_EQ(v, kBackground);
}

TEST(RegionAlgebraProperty, NestingAndRoundTripOnRandomVolumes) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const kernels::Dims3 e{1 + static_cast<std::int64_t>(rng.below(6)),
                           1 + static_cast<std::int64_t>(rng.below(6)),
                           1 + static_cast<std::int64_t>(rng.below(6))};
    const auto l = random_labels(rng, e);
    const auto m = regions_from_labels(l);
    for (std::int64_t i = 0; i < e.volume(); ++i) {
      const auto [et, tc, wt] = regions_at(m, i);
      ASSERT_LE(et, tc);
      ASSERT_LE(tc, wt);
    }
    ASSERT_EQ(labels_from_regions(m).voxels, l.voxels);
  }
}

TEST(DiceScore, Anchors) {
  const std::vector<std::uint8_t> a{1, 1, 0, 0}, b{0, 0, 1, 1}, none{0, 0, 0, 0};
  EXPECT_EQ(dice_score(a, a), 1.0);
  EXPECT_EQ(dice_score(a, b), 0.0);
  EXPECT_EQ(dice_score(none, none), 1.0);
  std::vector<std::uint8_t> p(16, 0), g(16, 0);
  for (int i = 0; i < 8; ++i) p[i] = 1;
  for (int i = 4; i < 12; ++i) g[i] = 1;
  EXPECT_DOUBLE_EQ(dice_score(p, g), 0.5);
}

TEST(DiceScoreProperty, SymmetricAndOneOnlyForEqualMasks) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> a(12), b(12);
    for (auto& v : a) v = rng.bernoulli(0.3);
    for (auto& v : b) v = rng.bernoulli(0.3);
    EXPECT_EQ(dice_score(a, b), dice_score(b, a));
    EXPECT_EQ(dice_score(a, b) == 1.0, a == b);
  }
}

TEST(AggregateReport, SingleCase) {
  const auto r = aggregate_report({{"c", {1.0, 1.0, 1.0}}});
  EXPECT_EQ(r.mean, (std::array<double, 3>{1.0, 1.0, 1.0}));
  EXPECT_EQ(r.stddev, (std::array<double, 3>{0.0, 0.0, 0.0}));
  EXPECT_NE(render_table(r, "x").find("100.00_{0.00}"), std::string::npos);
}

TEST(AggregateReport, TwoPointPopulationStatistics) {
  const auto r = aggregate_report({{"a", {0.8, 0.5, 0.5}}, {"b", {0.6, 0.5, 0.5}}});
  EXPECT_NEAR(r.mean[kRegionET], 0.7, 1e-12);
  EXPECT_NEAR(r.stddev[kRegionET], 0.1, 1e-12);
  EXPECT_NE(render_table(r, "x").find("70.00_{10.00}"), std::string::npos);
  // Per-case averages 0.6 and 0.5333 give the AVG cell.
  EXPECT_NEAR(r.average, 1.7 / 3.0, 1e-12);
  EXPECT_NEAR(r.average_stddev, 0.1 / 3.0, 1e-12);
  EXPECT_NE(render_table(r, "x").find("56.67_{3.33}"), std::string::npos);
  EXPECT_THROW(aggregate_report({}), ShapeError);
}

TEST(AggregateReport, TableColumnOrderAndRecords) {
  const auto r = aggregate_report({{"case_000", {0.9, 0.8, 0.7}}});
  const std::string table = render_table(r, "baseline");
  const auto et = table.find("ET"), tc = table.find("TC"), wt = table.find("WT"), avg = table.find("AVG");
  ASSERT_NE(avg, std::string::npos);
  EXPECT_LT(et, tc);
  EXPECT_LT(tc, wt);
  EXPECT_LT(wt, avg);
  EXPECT_NE(table.find("80.00_{0.00}"), std::string::npos);

  std::istringstream lines(render_records(r, "baseline"));
  std::string line;
  std::getline(lines, line);
  const auto rec = nlohmann::json::parse(line);
  EXPECT_EQ(rec["case_id"], "case_000");
  EXPECT_DOUBLE_EQ(rec["dice_et"].get<double>(), 0.9);
  EXPECT_DOUBLE_EQ(rec["dice_wt"].get<double>(), 0.7);
  std::getline(lines, line);
  EXPECT_TRUE(nlohmann::json::parse(line).contains("mean_avg"));
}

Tensor<double> one_channel(std::vector<double> v) {
  const auto n = static_cast<std::int64_t>(v.size());
  return Tensor<double>(Shape{1, 1, 1, 1, n}, std::move(v));
}

TEST(SoftDice, UniformHalfOnFourOfEight) {
  const auto p = Tensor<double>::full(Shape{1, 1, 2, 2, 2}, 0.5);
  const auto t = one_channel({1, 1, 1, 1, 0, 0, 0, 0});
  EXPECT_NEAR(soft_dice_loss(p, Tensor<double>(p.shape(), {t.values().begin(), t.values().end()})).item(),
              0.5, 1e-6);
}

TEST(SoftDice, PerfectMatchVanishes) {
  std::vector<double> t(64, 0.0);
  for (int i = 0; i < 8; ++i) t[i * 7] = 1.0;
  const Tensor<double> target(Shape{1, 1, 4, 4, 4}, t);
  EXPECT_LT(soft_dice_loss(target, target).item(), 1e-5);
}

TEST(SoftDice, EmptyTargetAndEmptyPrediction) {
  const auto z = Tensor<double>::zeros(Shape{1, 1, 2, 2, 2});
  EXPECT_NEAR(soft_dice_loss(z, z).item(), 0.0, 1e-12);
}

TEST(SoftDiceProperty, InvariantUnderVoxelPermutation) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(24), t(24);
    for (auto& v : p) v = rng.uniform();
    for (auto& v : t) v = rng.bernoulli(0.4);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<double> pp(24), tt(24);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 8; ++i) {
        pp[c * 8 + i] = p[c * 8 + perm[i]];
        tt[c * 8 + i] = t[c * 8 + perm[i]];
      }
    }
    const Shape s{1, 3, 2, 2, 2};
    EXPECT_NEAR(soft_dice_loss(Tensor<double>(s, p), Tensor<double>(s, t)).item(),
                soft_dice_loss(Tensor<double>(s, pp), Tensor<double>(s, tt)).item(), 1e-14);
  }
}

TEST(Bce, MidpointIsLogTwo) {
  Rng rng(4);
  std::vector<double> t(27);
  for (auto& v : t) v = rng.bernoulli(0.5);
  const Shape s{1, 1, 3, 3, 3};
  EXPECT_NEAR(bce_loss(Tensor<double>::full(s, 0.5), Tensor<double>(s, t)).item(), std::log(2.0), 1e-6);
}

TEST(Bce, PerfectMatchAndClampedExtreme) {
  const auto t = one_channel({1, 0, 1, 0});
  EXPECT_LE(bce_loss(t, t).item(), -std::log(1.0 - kBceClamp) + 1e-12);
  const auto one = one_channel({1.0});
  EXPECT_NEAR(bce_loss(one_channel({kBceClamp}), one).item(), -std::log(kBceClamp), 1e-6);
  EXPECT_NEAR(bce_loss(one_channel({0.0}), one).item(), 16.118, 1e-3);
}

TEST(CombinedLoss, ConfidentCorrectLogitsVanish) {
  const Shape s{1, 3, 2, 2, 2};
  std::vector<double> t(24), z(24);
  for (int i = 0; i < 24; ++i) {
    t[i] = (i % 3 == 0);
    z[i] = t[i] > 0 ? 50.0 : -50.0;
  }
  EXPECT_LT(combined_loss(Tensor<double>(s, z), Tensor<double>(s, t)).item(), 1e-4);
}

TEST(CombinedLoss, ZeroLogitsAreSumOfMidpoints) {
  const Shape s{1, 3, 2, 2, 2};
  Rng rng(5);
  std::vector<double> t(24);
  for (auto& v : t) v = rng.bernoulli(0.5);
  const Tensor<double> target(s, t);
  const double expected = std::log(2.0) + soft_dice_loss(Tensor<double>::full(s, 0.5), target).item();
  EXPECT_NEAR(combined_loss(Tensor<double>::zeros(s), target).item(), expected, 1e-12);
}

TEST(CombinedLossProperty, NonNegative) {
  Rng rng(6);
  const Shape s{2, 3, 2, 2, 2};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t(48);
    for (auto& v : t) v = rng.bernoulli(0.3);
    const auto logits = random_tensor<double>(s, rng, false, -8, 8);
    EXPECT_GE(combined_loss(logits, Tensor<double>(s, t)).item(), 0.0);
  }
}

TEST(DeepSupervision, WeightsAreNormalizedHalving) {
  const auto w = deep_supervision_weights(3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(w[1], 2.0 / 7.0);
  EXPECT_DOUBLE_EQ(w[2], 1.0 / 7.0);
  EXPECT_EQ(deep_supervision_weights(1), std::vector<double>{1.0});
}

TEST(DeepSupervision, HandEvaluatedWeightedSum) {
  const std::vector<Tensor<double>> losses{Tensor<double>::scalar(0.7), Tensor<double>::scalar(0.5),
                                           Tensor<double>::scalar(0.3)};
  EXPECT_NEAR(weighted_loss_sum(losses, deep_supervision_weights(3)).item(), 0.585714, 1e-6);
  EXPECT_THROW(weighted_loss_sum(losses, deep_supervision_weights(2)), ShapeError);
}

TEST(DeepSupervision, SingleHeadEqualsCombinedLoss) {
  Rng rng(7);
  const Shape s{1, 3, 4, 4, 4};
  std::vector<double> t(s.numel());
  for (auto& v : t) v = rng.bernoulli(0.3);
  const Tensor<double> target(s, t);
  const auto logits = random_tensor<double>(s, rng);
  EXPECT_EQ(deep_supervision_loss<double>({logits}, target).item(), combined_loss(logits, target).item());
}

TEST(DeepSupervision, EqualPerHeadLossesGiveThatLoss) {
  // Constant targets and logits make every head's loss identical up to the
  // Dice smoothing term, whose weight grows as the head volume shrinks.
  const auto target = Tensor<double>::full(Shape{1, 3, 8, 8, 8}, 1.0);
  std::vector<Tensor<double>> heads;
  for (const std::int64_t e : {8, 4, 2}) heads.push_back(Tensor<double>::full(Shape{1, 3, e, e, e}, 0.3));
  const double single = combined_loss(heads[0], target).item();
  EXPECT_NEAR(deep_supervision_loss(heads, target).item(), single, 1e-6);
}

TEST(DownsampleTargets, MaxPoolKeepsThinStructures) {
  std::vector<float> t(64, 0.0f);
  t[21] = 1.0f;  // (1, 1, 1)
  const auto d = downsample_targets(Tensor<float>(Shape{1, 1, 4, 4, 4}, t), 1);
  ASSERT_EQ(d.shape(), (Shape{1, 1, 2, 2, 2}));
  EXPECT_EQ(d.values()[0], 1.0f);
  EXPECT_EQ(sum(d).item(), 1.0f);
}

TEST(MasksToTensor, StacksChannels) {
  const auto m = regions_from_labels(labels({1, 1, 2}, {3, 2}));
  const auto t = masks_to_tensor<float>(std::span<const RegionMasks>(&m, 1));
  EXPECT_EQ(t.shape(), (Shape{1, 3, 1, 1, 2}));
  EXPECT_EQ(std::vector<float>(t.values().begin(), t.values().end()),
            (std::vector<float>{1, 0, 1, 0, 1, 1}));
}

}  // namespace
}  // namespace scseg
