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
#include "scseg/gradcheck_scopes.hpp"

#include <functional>
#include <map>

#include "scseg/errors.hpp"
#include "scseg/losses.hpp"
#include "scseg/nn_ops.hpp"
#include "scseg/ops.hpp"
#include "scseg/rng.hpp"
#include "scseg/sc_conv.hpp"
#include "scseg/unet.hpp"

namespace scseg {

namespace {

using D = double;

Tensor<D> random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double lo = -1.0,
                        double hi = 1.0) {
  std::vector<D> v(shape.numel());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<D>(std::move(shape), std::move(v), requires_grad);
}

// Random linear functional sum(w * y) with w fixed at first use.
class Probe {
 public:
  explicit Probe(Rng& rng) : rng_(rng) {}

  Tensor<D> operator()(const std::vector<Tensor<D>>& outputs) {
    while (weights_.size() < outputs.size()) {
      weights_.push_back(random_tensor(outputs[weights_.size()].shape(), rng_, false));
    }
    Tensor<D> total = sum(mul(outputs[0], weights_[0]));
    for (std::size_t i = 1; i < outputs.size(); ++i) {
      total = add(total, sum(mul(outputs[i], weights_[i])));
    }
    return total;
  }

 private:
  Rng& rng_;
  std::vector<Tensor<D>> weights_;
};

// Randomizes the values of conv biases and norm affines, which init leaves
// at 0 / 1, so their gradients are exercised away from special points.
void jitter(ParamList<D>& params, Rng& rng) {
  for (auto& p : params) {
    for (auto& v : p.tensor.mutable_values()) v += rng.uniform(-0.3, 0.3);
  }
}

using ScopeFn = std::function<GradCheckReport(Rng&)>;

GradCheckReport conv_scope(Rng& rng, std::int64_t in, std::int64_t out, std::int64_t k,
                           std::int64_t stride, std::int64_t groups, Dims3 extent) {
  auto p = Conv3dParams<D>::create(in, out, k, rng, stride, groups);
  ParamList<D> params;
  append_params(params, "conv", p);
  jitter(params, rng);
  Tensor<D> x = random_tensor(Shape{2, in, extent.d, extent.h, extent.w}, rng);
  Probe probe(rng);
  params.insert(params.begin(), {"x", x});
  return check_gradients([&] { return probe({conv3d(x, p)}); }, params);
}

const std::map<std::string, ScopeFn>& registry() {
  static const std::map<std::string, ScopeFn> scopes{
      {"add",
       [](Rng& rng) {
         Tensor<D> a = random_tensor(Shape{2, 2, 2, 2, 2}, rng), b = random_tensor(Shape{2, 2, 2, 2, 2}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({add(a, b)}); }, {{"a", a}, {"b", b}});
       }},
      {"mul",
       [](Rng& rng) {
         Tensor<D> a = random_tensor(Shape{2, 2, 2, 2, 2}, rng), b = random_tensor(Shape{2, 2, 2, 2, 2}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({mul(a, b)}); }, {{"a", a}, {"b", b}});
       }},
      {"sigmoid",
       [](Rng& rng) {
         Tensor<D> x = random_tensor(Shape{2, 2, 3, 3, 3}, rng, true, -4.0, 4.0);
         Probe probe(rng);
         return check_gradients([&] { return probe({sigmoid(x)}); }, {{"x", x}});
       }},
      {"leaky_relu",
       [](Rng& rng) {
         Tensor<D> x = random_tensor(Shape{2, 2, 3, 3, 3}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({leaky_relu(x, 0.01)}); }, {{"x", x}});
       }},
      {"concat_channels",
       [](Rng& rng) {
         Tensor<D> a = random_tensor(Shape{1, 2, 2, 3, 2}, rng), b = random_tensor(Shape{1, 3, 2, 3, 2}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({concat_channels(a, b)}); }, {{"a", a}, {"b", b}});
       }},
      {"split_channels",
       [](Rng& rng) {
         Tensor<D> x = random_tensor(Shape{2, 5, 2, 2, 2}, rng);
         Probe probe(rng);
         return check_gradients(
             [&] {
               auto [lo, hi] = split_channels(x, 2);
               return probe({lo, hi});
             },
             {{"x", x}});
       }},
      {"conv3d", [](Rng& rng) { return conv_scope(rng, 2, 3, 3, 1, 1, {4, 4, 4}); }},
      {"conv3d_pointwise", [](Rng& rng) { return conv_scope(rng, 3, 2, 1, 1, 1, {3, 4, 5}); }},
      {"conv3d_grouped", [](Rng& rng) { return conv_scope(rng, 4, 2, 3, 1, 2, {4, 4, 4}); }},
      {"conv3d_strided", [](Rng& rng) { return conv_scope(rng, 2, 2, 3, 2, 1, {5, 5, 5}); }},
      {"conv_transpose3d",
       [](Rng& rng) {
         auto p = ConvTranspose3dParams<D>::create(2, 3, 2, 2, rng);
         ParamList<D> params;
         append_params(params, "up", p);
         jitter(params, rng);
         Tensor<D> x = random_tensor(Shape{2, 2, 3, 3, 3}, rng);
         params.insert(params.begin(), {"x", x});
         Probe probe(rng);
         return check_gradients([&] { return probe({conv_transpose3d(x, p)}); }, params);
       }},
      {"avg_pool3d",
       [](Rng& rng) {
         Tensor<D> x = random_tensor(Shape{2, 2, 4, 4, 4}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({avg_pool3d(x, 2)}); }, {{"x", x}});
       }},
      {"upsample3d_nearest",
       [](Rng& rng) {
         Tensor<D> x = random_tensor(Shape{2, 2, 3, 3, 3}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({upsample3d(x, 2, Interp::Nearest)}); }, {{"x", x}});
       }},
      {"upsample3d_trilinear",
       [](Rng& rng) {
         Tensor<D> x = random_tensor(Shape{2, 2, 3, 3, 3}, rng);
         Probe probe(rng);
         return check_gradients([&] { return probe({upsample3d(x, 2, Interp::Trilinear)}); },
                                {{"x", x}});
       }},
      {"instance_norm",
       [](Rng& rng) {
         auto p = InstanceNormParams<D>::create(3);
         ParamList<D> params;
         append_params(params, "norm", p);
         jitter(params, rng);
         Tensor<D> x = random_tensor(Shape{2, 3, 3, 3, 3}, rng);
         params.insert(params.begin(), {"x", x});
         Probe probe(rng);
         return check_gradients([&] { return probe({instance_norm(x, p)}); }, params);
       }},
      {"losses",
       [](Rng& rng) {
         Tensor<D> logits = random_tensor(Shape{1, 3, 2, 2, 2}, rng, true, -3.0, 3.0);
         std::vector<D> t(24);
         for (auto& v : t) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
         const Tensor<D> targets(Shape{1, 3, 2, 2, 2}, std::move(t));
         return check_gradients([&] { return combined_loss(logits, targets); }, {{"logits", logits}});
       }},
      {"scconv",
       [](Rng& rng) {
         SCConvConfig cfg;
         cfg.in_channels = 4;
         cfg.out_channels = 4;
         cfg.r = 2;
         auto p = SCConvParams<D>::create(cfg, rng);
         ParamList<D> params;
         append_params(params, "sc", p);
         jitter(params, rng);
         Tensor<D> x = random_tensor(Shape{1, 4, 6, 6, 6}, rng);
         params.insert(params.begin(), {"x", x});
         Probe probe(rng);
         return check_gradients([&] { return probe({sc_conv_forward(x, p)}); }, params);
       }},
      {"unet-tiny",
       [](Rng& rng) {
         GradCheckReport all;
         for (const VariantId v : {VariantId::Baseline, VariantId::M3}) {
           UNetConfig cfg;
           cfg.depth = 2;
           cfg.base_channels = 2;
           cfg.patch_size = 8;
           cfg.variant = v;
           Network<D> net = build_network<D>(cfg, rng.next());
           jitter(net.params, rng);
           ParamList<D> params = net.params;
           Tensor<D> x = random_tensor(Shape{1, 4, 8, 8, 8}, rng);
           params.insert(params.begin(), {"x", x});
           Probe probe(rng);
           GradCheckReport r = check_gradients([&] { return probe(forward(net, x)); }, params);
           for (auto& g : r.groups) {
             g.name = to_string(v) + "/" + g.name;
             all.groups.push_back(g);
           }
           all.scale = std::max(all.scale, r.scale);
           all.max_rel_error = std::max(all.max_rel_error, r.max_rel_error);
         }
         return all;
       }},
  };
  return scopes;
}

}  // namespace

const std::vector<std::string>& gradcheck_scopes() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) {
      if (name != "scconv" && name != "unet-tiny") out.push_back(name);
    }
    out.push_back("scconv");
    out.push_back("unet-tiny");
    return out;
  }();
  return names;
}

std::vector<std::string> gradcheck_primitive_scopes() {
  const auto& all = gradcheck_scopes();
  return {all.begin(), all.end() - 2};
}

GradCheckReport run_gradcheck_scope(const std::string& scope, std::uint64_t seed) {
  const auto& reg = registry();
  auto it = reg.find(scope);
  if (it == reg.end()) throw ConfigError("unknown gradcheck scope '" + scope + "'");
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a, stable across standard libraries
  for (const unsigned char c : scope) h = (h ^ c) * 1099511628211ULL;
  Rng rng(Rng::derive(seed, h));
  return it->second(rng);
}

}  // namespace scseg
