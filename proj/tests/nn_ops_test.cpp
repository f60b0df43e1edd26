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
#include <numeric>

#include "scseg/errors.hpp"
#include "scseg/gradcheck_scopes.hpp"
#include "scseg/kernels.hpp"
#include "scseg/nn_ops.hpp"
#include "scseg/ops.hpp"
#include "scseg/reference.hpp"
#include "test_util.hpp"

namespace scseg {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;
using testing::to_vector;

Conv3dParams<float> fixed_conv(std::int64_t in, std::int64_t out, std::int64_t k, float w, float b,
                               std::int64_t stride = 1, std::int64_t groups = 1) {
  Rng rng(0);
  auto p = Conv3dParams<float>::create(in, out, k, rng, stride, groups);
  for (auto& v : p.weight.mutable_values()) v = w;
  for (auto& v : p.bias.mutable_values()) v = b;
  return p;
}

TEST(Conv3d, PointwiseIdentityKernel) {
  Rng rng(1);
  const auto x = random_tensor<float>(Shape{2, 1, 3, 4, 5}, rng);
  EXPECT_EQ(to_vector(conv3d(x, fixed_conv(1, 1, 1, 1.0f, 0.0f))), to_vector(x));
}

TEST(Conv3d, AllOnesKernelCountsNeighbours) {
  const auto x = Tensor<float>::full(Shape{1, 1, 3, 3, 3}, 1.0f);
  const auto y = conv3d(x, fixed_conv(1, 1, 3, 1.0f, 0.0f));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3, 3}));
  EXPECT_EQ(y.values()[13], 27.0f);  // centre
  EXPECT_EQ(y.values()[0], 8.0f);    // corner
  EXPECT_EQ(y.values()[26], 8.0f);
  EXPECT_EQ(y.values()[1], 12.0f);   // edge
  EXPECT_EQ(y.values()[4], 18.0f);   // face
}

TEST(Conv3d, GroupedEqualsTwoConvsOnHalves) {
  Rng rng(2);
  auto grouped = Conv3dParams<float>::create(4, 6, 3, rng, 1, 2);
  for (auto& v : grouped.bias.mutable_values()) v = static_cast<float>(rng.uniform(-1, 1));
  const auto x = random_tensor<float>(Shape{2, 4, 4, 4, 4}, rng);

  auto half = [&](int g) {
    Conv3dParams<float> p = Conv3dParams<float>::create(2, 3, 3, rng);
    const auto w = grouped.weight.values();
    const std::size_t n = w.size() / 2;
    std::copy(w.begin() + g * n, w.begin() + (g + 1) * n, p.weight.mutable_values().begin());
    for (int i = 0; i < 3; ++i) p.bias.mutable_values()[i] = grouped.bias.values()[g * 3 + i];
    return p;
  };
  const auto [x0, x1] = split_channels(x, 2);
  const auto expected = concat_channels(conv3d(x0, half(0)), conv3d(x1, half(1)));
  EXPECT_LT(max_abs_diff(to_vector(conv3d(x, grouped)), to_vector(expected)), 1e-5);
}

TEST(Conv3d, StridedShapeFollowsFormula) {
  Rng rng(3);
  const auto x = random_tensor<float>(Shape{1, 2, 7, 6, 5}, rng);
  const auto y = conv3d(x, Conv3dParams<float>::create(2, 3, 3, rng, 2));
  // floor((n + 2 - 3) / 2) + 1
  EXPECT_EQ(y.shape(), (Shape{1, 3, 4, 3, 3}));
}

TEST(Conv3d, ChannelMismatchThrows) {
  Rng rng(4);
  const auto x = Tensor<float>::zeros(Shape{1, 3, 4, 4, 4});
  EXPECT_THROW(conv3d(x, Conv3dParams<float>::create(2, 2, 3, rng)), ShapeError);
  EXPECT_THROW(Conv3dParams<float>::create(3, 4, 3, rng, 1, 2), ShapeError);
}

// Property: the parallel im2col kernel agrees with the direct nested loops.
TEST(Conv3dProperty, MatchesDirectReference) {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const std::int64_t groups = 1 + rng.below(2);
    const std::int64_t cin = groups * (1 + rng.below(2)), cout = groups * (1 + rng.below(2));
    const std::int64_t k = rng.bernoulli(0.5) ? 1 : 3, stride = 1 + rng.below(2);
    const std::int64_t pad = (k - 1) / 2, batch = 1 + rng.below(2);
    const kernels::Dims3 in{2 + static_cast<std::int64_t>(rng.below(5)),
                            2 + static_cast<std::int64_t>(rng.below(5)),
                            2 + static_cast<std::int64_t>(rng.below(5))};
    const auto g = kernels::ConvGeometry::make(batch, cin, in, cout, {k, k, k},
                                               {stride, stride, stride}, {pad, pad, pad}, groups);
    std::vector<float> x(batch * cin * in.volume()), w(cout * g.patch_size()), b(cout);
    for (auto* v : {&x, &w, &b}) {
      for (auto& e : *v) e = static_cast<float>(rng.uniform(-1, 1));
    }
    std::vector<float> y(batch * cout * g.out.volume());
    kernels::conv3d_forward<float>(g, x, w, b, y);
    const auto ref = reference::conv3d<float>(g, x, w, b);
    EXPECT_LT(max_abs_diff(y, ref), 1e-5) << "trial " << trial;
  }
}

// Property: <conv(x), y> == <x, conv_transpose(y)> for a shared kernel.
TEST(ConvTranspose3dProperty, AdjointIdentity) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t cin = 1 + rng.below(3), cout = 1 + rng.below(3);
    const std::int64_t k = 2, s = 2;
    auto up = ConvTranspose3dParams<double>::create(cout, cin, k, s, rng);
    for (auto& v : up.bias.mutable_values()) v = 0.0;
    // A forward conv mapping cin -> cout with the same weight tensor.
    Conv3dParams<double> down = Conv3dParams<double>::create(cin, cout, k, rng, s);
    down.padding = {0, 0, 0};
    std::copy(up.weight.values().begin(), up.weight.values().end(), down.weight.mutable_values().begin());
    for (auto& v : down.bias.mutable_values()) v = 0.0;

    const auto x = random_tensor<double>(Shape{1, cin, 4, 4, 4}, rng);
    const auto y = random_tensor<double>(Shape{1, cout, 2, 2, 2}, rng);
    const double lhs = sum(mul(conv3d(x, down), y)).item();
    const double rhs = sum(mul(x, conv_transpose3d(y, up))).item();
    EXPECT_NEAR(lhs, rhs, 1e-5 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(ConvTranspose3d, SingleTapExpansion) {
  Rng rng(7);
  auto p = ConvTranspose3dParams<float>::create(1, 1, 2, 2, rng);
  for (auto& v : p.weight.mutable_values()) v = 1.0f;
  const auto y = conv_transpose3d(Tensor<float>(Shape{1, 1, 1, 1, 1}, {2.5f}), p);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2, 2}));
  for (float v : y.values()) EXPECT_EQ(v, 2.5f);
}

TEST(ConvTranspose3d, ShapeContract) {
  Rng rng(8);
  auto p = ConvTranspose3dParams<float>::create(4, 3, 2, 2, rng);
  EXPECT_EQ(conv_transpose3d(Tensor<float>::zeros(Shape{1, 4, 8, 8, 8}), p).shape(),
            (Shape{1, 3, 16, 16, 16}));
}

TEST(ConvTranspose3d, MatchesDirectReference) {
  Rng rng(9);
  auto p = ConvTranspose3dParams<float>::create(3, 2, 2, 2, rng);
  for (auto& v : p.bias.mutable_values()) v = static_cast<float>(rng.uniform(-1, 1));
  const auto x = random_tensor<float>(Shape{2, 3, 3, 2, 3}, rng);
  const auto g = kernels::ConvGeometry::make(2, 2, {6, 4, 6}, 3, {2, 2, 2}, {2, 2, 2}, {0, 0, 0}, 1);
  const auto ref = reference::conv_transpose3d<float>(g, x.values(), p.weight.values(), p.bias.values());
  EXPECT_LT(max_abs_diff(to_vector(conv_transpose3d(x, p)), ref), 1e-5);
}

TEST(AvgPool3d, BlockMean) {
  std::vector<float> v(8);
  std::iota(v.begin(), v.end(), 0.0f);
  EXPECT_EQ(avg_pool3d(Tensor<float>(Shape{1, 1, 2, 2, 2}, v), 2).item(), 3.5f);
}

TEST(AvgPool3d, ConstantStaysConstant) {
  const auto y = avg_pool3d(Tensor<float>::full(Shape{1, 2, 4, 4, 4}, 1.25f), 2);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2, 2, 2}));
  for (float v : y.values()) EXPECT_EQ(v, 1.25f);
}

TEST(AvgPool3d, FactorOneIsIdentity) {
  Rng rng(10);
  const auto x = random_tensor<float>(Shape{1, 2, 3, 3, 3}, rng);
  EXPECT_EQ(to_vector(avg_pool3d(x, 1)), to_vector(x));
}

TEST(AvgPool3d, IndivisibleExtentThrows) {
  EXPECT_THROW(avg_pool3d(Tensor<float>::zeros(Shape{1, 1, 3, 4, 4}), 2), ShapeError);
}

TEST(AvgPool3dProperty, PreservesMeanAndMatchesReference) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t r = 1 + rng.below(3);
    const auto x = random_tensor<double>(Shape{2, 2, 2 * r, 3 * r, r}, rng);
    const auto y = avg_pool3d(x, r);
    const double mx = sum(x).item() / x.numel(), my = sum(y).item() / y.numel();
    EXPECT_NEAR(mx, my, 1e-12);
    const auto ref = reference::avg_pool3d<double>(4, {2 * r, 3 * r, r}, r, x.values());
    EXPECT_LT(max_abs_diff(to_vector(y), ref), 1e-12);
  }
}

TEST(Upsample3d, NearestReplicatesVoxel) {
  const auto y = upsample3d(Tensor<float>(Shape{1, 1, 1, 1, 1}, {4.0f}), 2, Interp::Nearest);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2, 2}));
  for (float v : y.values()) EXPECT_EQ(v, 4.0f);
}

TEST(Upsample3d, ConstantStaysConstantInBothModes) {
  for (const Interp mode : {Interp::Nearest, Interp::Trilinear}) {
    const auto y = upsample3d(Tensor<double>::full(Shape{1, 2, 2, 3, 2}, -0.75), 2, mode);
    EXPECT_EQ(y.shape(), (Shape{1, 2, 4, 6, 4}));
    for (double v : y.values()) EXPECT_NEAR(v, -0.75, 1e-15);
  }
}

TEST(Upsample3d, BlockConstantRoundTripWithPooling) {
  Rng rng(12);
  const auto coarse = random_tensor<float>(Shape{1, 2, 2, 3, 2}, rng);
  const auto x = upsample3d(coarse, 2, Interp::Nearest);  // constant within each 2^3 block
  EXPECT_EQ(to_vector(upsample3d(avg_pool3d(x, 2), 2, Interp::Nearest)), to_vector(x));
}

TEST(Upsample3d, TrilinearMatchesReference) {
  Rng rng(13);
  const auto x = random_tensor<double>(Shape{2, 3, 3, 2, 4}, rng);
  const auto ref = reference::upsample3d<double>(6, {3, 2, 4}, 2, Interp::Trilinear, x.values());
  EXPECT_LT(max_abs_diff(to_vector(upsample3d(x, 2, Interp::Trilinear)), ref), 1e-12);
}

TEST(InstanceNorm, ConstantSliceGivesZeros) {
  const auto y = instance_norm(Tensor<float>::full(Shape{1, 2, 3, 3, 3}, 5.0f),
                               InstanceNormParams<float>::create(2));
  for (float v : y.values()) EXPECT_EQ(v, 0.0f);
}

TEST(InstanceNorm, TwoPointSlice) {
  auto p = InstanceNormParams<double>::create(1);
  p.eps = 1e-12;
  const auto y = instance_norm(Tensor<double>(Shape{1, 1, 1, 1, 2}, {0.0, 2.0}), p);
  EXPECT_NEAR(y.values()[0], -1.0, 1e-9);
  EXPECT_NEAR(y.values()[1], 1.0, 1e-9);
}

TEST(InstanceNorm, ZeroGammaCollapsesToBeta) {
  Rng rng(14);
  auto p = InstanceNormParams<float>::create(2);
  p.gamma.mutable_values()[0] = p.gamma.mutable_values()[1] = 0.0f;
  p.beta.mutable_values()[0] = 0.3f;
  p.beta.mutable_values()[1] = -2.0f;
  const auto y = instance_norm(random_tensor<float>(Shape{1, 2, 2, 2, 2}, rng), p);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(y.values()[i], 0.3f);
  for (int i = 8; i < 16; ++i) EXPECT_EQ(y.values()[i], -2.0f);
}

TEST(InstanceNormProperty, StandardizesEverySlice) {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t b = 1 + rng.below(2), c = 1 + rng.below(4);
    const auto x = random_tensor<double>(Shape{b, c, 4, 3, 5}, rng, false, -3, 5);
    const auto y = instance_norm(x, InstanceNormParams<double>::create(c));
    const std::int64_t n = 60;
    for (std::int64_t s = 0; s < b * c; ++s) {
      double m = 0, v = 0;
      for (std::int64_t i = 0; i < n; ++i) m += y.values()[s * n + i];
      m /= n;
      for (std::int64_t i = 0; i < n; ++i) v += std::pow(y.values()[s * n + i] - m, 2);
      v /= n;
      EXPECT_LT(std::abs(m), 1e-5);
      EXPECT_LT(std::abs(v - 1.0), 1e-3);
    }
    const auto ref = reference::instance_norm<double>(b, c, n, x.values(),
                                                      std::vector<double>(c, 1.0),
                                                      std::vector<double>(c, 0.0), kInstanceNormEps);
    EXPECT_LT(max_abs_diff(to_vector(y), ref), 1e-12);
  }
}

class PrimitiveGradCheck : public ::testing::TestWithParam<std::string> {};

TEST_P(PrimitiveGradCheck, MatchesFiniteDifferences) {
  const auto r = run_gradcheck_scope(GetParam());
  ASSERT_FALSE(r.groups.empty());
  EXPECT_LT(r.max_rel_error, kGradCheckTolerance);
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradCheck,
                         ::testing::ValuesIn(gradcheck_primitive_scopes()),
                         [](const auto& info) {
                           std::string s = info.param;
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(GradCheckScopes, UnknownScopeThrows) {
  EXPECT_THROW(run_gradcheck_scope("no-such-op"), ConfigError);
}

}  // namespace
}  // namespace scseg
