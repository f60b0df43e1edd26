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

#include <set>

#include "scseg/errors.hpp"
#include "scseg/gradcheck_scopes.hpp"
#include "scseg/ops.hpp"
#include "scseg/parallel.hpp"
#include "scseg/sc_conv.hpp"
#include "test_util.hpp"

namespace scseg {
namespace {

using testing::random_tensor;
using testing::to_vector;

SCConvConfig config(std::int64_t c, std::int64_t c_out, std::int64_t r) {
  SCConvConfig cfg;
  cfg.in_channels = c;
  cfg.out_channels = c_out;
  cfg.r = r;
  return cfg;
}

class DeterministicMode {
 public:
  DeterministicMode() : previous_(parallel::deterministic()) { parallel::set_deterministic(true); }
  ~DeterministicMode() { parallel::set_deterministic(previous_); }

 private:
  bool previous_;
};

TEST(SCConv, ShapeContractForDefaultModule) {
  Rng rng(1);
  const auto p = SCConvParams<float>::create(config(8, 8, 2), rng);
  const auto x = random_tensor<float>(Shape{1, 8, 8, 8, 8}, rng);
  EXPECT_EQ(sc_conv_forward(x, p).shape(), (Shape{1, 8, 8, 8, 8}));
}

TEST(SCConvProperty, PreservesSpatialShapeForValidConfigs) {
  Rng rng(2);
  for (const std::int64_t c : {2, 4, 6}) {
    for (const std::int64_t r : {1, 2, 4}) {
      for (const std::int64_t k : {1, 3}) {
        SCConvConfig cfg = config(c, c + 1, r);
        cfg.co_kernels.fill(k);
        const auto p = SCConvParams<float>::create(cfg, rng);
        const std::int64_t e = 4 * r;
        const Shape in{2, c, e, 2 * r, r};
        const auto y = sc_conv_forward(random_tensor<float>(in, rng), p);
        EXPECT_EQ(y.shape(), (Shape{2, c + 1, e, 2 * r, r})) << "c=" << c << " r=" << r;
      }
    }
  }
}

TEST(SCConvProperty, GateLiesStrictlyInsideUnitInterval) {
  Rng rng(3);
  const auto p = SCConvParams<double>::create(config(4, 4, 2), rng);
  for (int trial = 0; trial < 5; ++trial) {
    SCConvTrace<double> trace;
    sc_conv_forward(random_tensor<double>(Shape{1, 4, 4, 4, 4}, rng, false, -5, 5), p, &trace);
    for (double g : trace.gate.values()) {
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(SCConv, ZeroParametersEmitZeros) {
  Rng rng(4);
  auto p = SCConvParams<float>::create(config(4, 6, 2), rng);
  ParamList<float> params;
  append_params(params, "sc", p);
  for (auto& np : params) {
    const bool gamma = np.name.ends_with(".gamma");
    for (auto& v : np.tensor.mutable_values()) v = gamma ? 1.0f : 0.0f;
  }
  SCConvTrace<float> trace;
  const auto y = sc_conv_forward(random_tensor<float>(Shape{2, 4, 4, 4, 4}, rng), p, &trace);
  for (float v : y.values()) EXPECT_EQ(v, 0.0f);
  for (float g : trace.gate.values()) EXPECT_EQ(g, 0.5f);
}

TEST(SCConv, EqualsRecompositionFromPrimitivesBitwise) {
  DeterministicMode det;
  Rng rng(5);
  const auto p = SCConvParams<float>::create(config(6, 4, 2), rng);
  const auto x = random_tensor<float>(Shape{2, 6, 4, 6, 4}, rng);

  const auto [x1, x2] = split_channels(conv3d(x, p.split), 3);
  const auto pooled = instance_norm(conv3d(avg_pool3d(x1, 2), p.co2.conv), p.co2.norm);
  const auto gate = sigmoid(add(x1, upsample3d(pooled, 2, Interp::Trilinear)));
  const auto cal = mul(gate, instance_norm(conv3d(x1, p.co3.conv), p.co3.norm));
  const auto y1 = leaky_relu(instance_norm(conv3d(cal, p.co4.conv), p.co4.norm), 0.01f);
  const auto y2 = leaky_relu(instance_norm(conv3d(x2, p.co1.conv), p.co1.norm), 0.01f);
  const auto y = leaky_relu(instance_norm(conv3d(concat_channels(y1, y2), p.co5.conv), p.co5.norm), 0.01f);

  EXPECT_EQ(to_vector(sc_conv_forward(x, p)), to_vector(y));
}

TEST(SCConvProperty, PoolingRateOneDegeneratesToDirectGate) {
  DeterministicMode det;
  Rng rng(6);
  for (const Interp mode : {Interp::Trilinear, Interp::Nearest}) {
    SCConvConfig cfg = config(4, 4, 1);
    cfg.upsample = mode;
    const auto p = SCConvParams<float>::create(cfg, rng);
    SCConvTrace<float> trace;
    sc_conv_forward(random_tensor<float>(Shape{1, 4, 5, 3, 4}, rng), p, &trace);
    const auto expected = sigmoid(add(trace.x1, conv_norm(trace.x1, p.co2)));
    EXPECT_EQ(to_vector(trace.gate), to_vector(expected));
  }
}

TEST(SCConv, RejectsOddChannelsAndIndivisibleExtents) {
  Rng rng(7);
  EXPECT_THROW(SCConvParams<float>::create(config(3, 4, 2), rng), ConfigError);
  SCConvConfig even_kernel = config(4, 4, 2);
  even_kernel.co_kernels[1] = 2;
  EXPECT_THROW(even_kernel.validate(), ConfigError);
  const auto p = SCConvParams<float>::create(config(4, 4, 2), rng);
  EXPECT_THROW(sc_conv_forward(Tensor<float>::zeros(Shape{1, 4, 5, 4, 4}), p), ShapeError);
}

std::int64_t enumerate(const SCConvConfig& cfg) {
  Rng rng(0);
  const auto p = SCConvParams<float>::create(cfg, rng);
  ParamList<float> params;
  append_params(params, "sc", p);
  std::int64_t n = 0;
  for (const auto& np : params) n += np.tensor.numel();
  return n;
}

TEST(SCConvParamCount, PointwiseTwoChannelEnumeration) {
  SCConvConfig cfg = config(2, 2, 2);
  cfg.co_kernels.fill(1);
  // split: 2*1 weights + 2 bias; CO1..CO4: 1 weight + 1 bias + 2 affine each;
  // CO5: 2*2 weights + 2 bias + 4 affine.
  EXPECT_EQ(sc_conv_param_count(cfg), 4 + 4 * 4 + 10);
  EXPECT_EQ(sc_conv_param_count(cfg), enumerate(cfg));
}

TEST(SCConvParamCount, MatchesRegistryEnumeration) {
  for (const std::int64_t c : {2, 4, 8, 16}) {
    for (const std::int64_t k : {1, 3, 5}) {
      SCConvConfig cfg = config(c, c + 2, 2);
      cfg.co_kernels.fill(k);
      EXPECT_EQ(sc_conv_param_count(cfg), enumerate(cfg));
    }
  }
}

TEST(SCConvParamCount, DoublingOutputChannelsOnlyTouchesFusion) {
  const auto base = config(8, 8, 2), wide = config(8, 16, 2);
  // CO5: out * c weights + out bias + 2 out affine.
  EXPECT_EQ(sc_conv_param_count(wide) - sc_conv_param_count(base), 8 * (8 + 1 + 2));
  Rng r1(0), r2(0);
  const auto a = SCConvParams<float>::create(base, r1);
  const auto b = SCConvParams<float>::create(wide, r2);
  EXPECT_EQ(a.split.weight.shape(), b.split.weight.shape());
  EXPECT_EQ(a.co4.conv.weight.shape(), b.co4.conv.weight.shape());
  EXPECT_NE(a.co5.conv.weight.shape(), b.co5.conv.weight.shape());
}

TEST(SCConvParamCount, PositiveAndMonotoneInChannels) {
  std::int64_t prev = 0;
  for (std::int64_t c = 2; c <= 32; c += 2) {
    const auto n = sc_conv_param_count(config(c, c, 2));
    EXPECT_GT(n, prev);
    prev = n;
  }
}

// Conv biases that feed an instance norm are removed by the mean
// subtraction, so their gradient is zero for every input. All other
// tensors must receive a nonzero gradient.
TEST(SCConvProperty, EveryParameterReceivesGradient) {
  Rng rng(8);
  auto p = SCConvParams<double>::create(config(4, 4, 2), rng);
  ParamList<double> params;
  append_params(params, "sc", p);
  for (auto& np : params) {
    for (auto& v : np.tensor.mutable_values()) v += rng.uniform(-0.3, 0.3);
  }
  backward(sum(sc_conv_forward(random_tensor<double>(Shape{2, 4, 4, 4, 4}, rng), p)));
  double scale = 0.0;
  for (const auto& np : params) {
    for (double g : np.tensor.grad()) scale = std::max(scale, std::abs(g));
  }
  ASSERT_GT(scale, 0.0);
  for (const auto& np : params) {
    ASSERT_TRUE(np.tensor.has_grad()) << np.name;
    double m = 0.0;
    for (double g : np.tensor.grad()) m = std::max(m, std::abs(g));
    const bool bias_before_norm = np.name.ends_with(".conv.bias");
    if (bias_before_norm) {
      EXPECT_LT(m, 1e-10 * scale) << np.name;
    } else {
      EXPECT_GT(m, 1e-8 * scale) << np.name;
    }
  }
}

TEST(SCConvGradCheck, WholeModuleFourChannelsSixCubed) {
  const auto r = run_gradcheck_scope("scconv");
  std::set<std::string> names;
  for (const auto& g : r.groups) names.insert(g.name);
  EXPECT_TRUE(names.contains("x"));
  EXPECT_TRUE(names.contains("sc.co2.conv.weight"));
  EXPECT_LT(r.max_rel_error, kGradCheckTolerance);
}

}  // namespace
}  // namespace scseg
