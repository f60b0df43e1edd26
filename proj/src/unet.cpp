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
#include "scseg/unet.hpp"

#include <algorithm>
#include <cctype>

#include "scseg/errors.hpp"
#include "scseg/ops.hpp"

namespace scseg {

std::string to_string(VariantId v) {
  switch (v) {
    case VariantId::Baseline: return "baseline";
    case VariantId::M1: return "m1";
    case VariantId::M2: return "m2";
    case VariantId::M3: return "m3";
  }
  return "?";
}

VariantId parse_variant(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "baseline") return VariantId::Baseline;
  if (s == "m1") return VariantId::M1;
  if (s == "m2") return VariantId::M2;
  if (s == "m3") return VariantId::M3;
  throw ConfigError("unknown variant '" + name + "' (expected baseline, m1, m2 or m3)");
}

std::int64_t UNetConfig::channels(std::int64_t level) const {
  std::int64_t c = base_channels;
  for (std::int64_t i = 0; i < level && c < max_channels; ++i) c *= 2;
  return std::min(c, max_channels);
}

std::int64_t UNetConfig::head_count() const { return std::min(deep_supervision_heads, depth); }

void UNetConfig::validate() const {
  if (in_channels < 1) throw ConfigError("network: in_channels must be positive");
  if (num_regions < 1) throw ConfigError("network: num_regions must be positive");
  if (depth < 1) throw ConfigError("network: depth must be >= 1");
  if (base_channels < 1 || max_channels < base_channels) {
    throw ConfigError("network: need 1 <= base_channels <= max_channels");
  }
  if (convs_per_stage < 1) throw ConfigError("network: convs_per_stage must be >= 1");
  if (deep_supervision_heads < 1) throw ConfigError("network: need at least one head");
  if (patch_size < 1) throw ConfigError("network: patch_size must be positive");
  if (act_slope < 0.0) throw ConfigError("network: activation slope must be >= 0");
  SCConvConfig probe = sc;
  probe.in_channels = 2;
  probe.out_channels = 1;
  probe.validate();

  std::int64_t e = patch_size;
  for (std::int64_t l = 1; l < depth; ++l) {
    if (e % 2 != 0) {
      throw ConfigError("network level " + std::to_string(l) + ": extent " + std::to_string(e) +
                        " of level " + std::to_string(l - 1) +
                        " cannot be halved (patch_size must be divisible by 2^(depth-1))");
    }
    e /= 2;
  }
  for (std::int64_t l = 0; l < depth; ++l) {
    const bool blocks = has_sc_blocks(variant);
    const bool skips = has_sc_skips(variant) && l < depth - 1;
    if ((blocks || skips) && extent(l) % sc.r != 0) {
      throw ConfigError("network level " + std::to_string(l) + ": extent " +
                        std::to_string(extent(l)) + " not divisible by SC-Conv r=" +
                        std::to_string(sc.r));
    }
    if (blocks) {
      const std::int64_t first_in = l == 0 ? in_channels : channels(l);
      if (first_in % 2 != 0) {
        throw ConfigError("network level 0: SC-Conv block needs an even input channel count, got " +
                          std::to_string(first_in));
      }
      if (channels(l) % 2 != 0) {
        throw ConfigError("network level " + std::to_string(l) +
                          ": SC-Conv blocks need an even channel count, got " +
                          std::to_string(channels(l)));
      }
    }
    if (skips && channels(l) % 2 != 0) {
      throw ConfigError("network level " + std::to_string(l) +
                        ": SC-Conv skip needs an even channel count, got " +
                        std::to_string(channels(l)));
    }
  }
}

namespace {

template <typename T>
StageBlock<T> make_block(const UNetConfig& cfg, std::int64_t in, std::int64_t out, Rng& rng) {
  StageBlock<T> b;
  if (has_sc_blocks(cfg.variant)) {
    SCConvConfig sc = cfg.sc;
    sc.in_channels = in;
    sc.out_channels = out;
    b.sc = SCConvParams<T>::create(sc, rng);
  } else {
    b.plain = ConvNormBlock<T>::create(in, out, 3, rng, 1, cfg.act_slope);
  }
  return b;
}

template <typename T>
void append_block(ParamList<T>& out, const std::string& prefix, const StageBlock<T>& b) {
  if (b.sc) {
    append_params(out, prefix + ".sc", *b.sc);
  } else {
    append_params(out, prefix, *b.plain);
  }
}

template <typename T>
Tensor<T> apply_block(const Tensor<T>& x, const StageBlock<T>& b, double slope) {
  return b.sc ? sc_conv_forward(x, *b.sc) : conv_norm_act(x, *b.plain, slope);
}

}  // namespace

template <typename T>
Network<T> build_network(const UNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Network<T> net;
  net.cfg = cfg;
  const std::int64_t depth = cfg.depth;

  for (std::int64_t l = 0; l < depth; ++l) {
    const std::int64_t c = cfg.channels(l);
    if (l > 0) {
      net.down.push_back(ConvNormBlock<T>::create(cfg.channels(l - 1), c, 3, rng, 2, cfg.act_slope));
    }
    std::vector<StageBlock<T>> level;
    for (std::int64_t j = 0; j < cfg.convs_per_stage; ++j) {
      const std::int64_t in = (l == 0 && j == 0) ? cfg.in_channels : c;
      level.push_back(make_block<T>(cfg, in, c, rng));
    }
    net.encoder.push_back(std::move(level));
  }

  for (std::int64_t l = 0; l + 1 < depth; ++l) {
    const std::int64_t c = cfg.channels(l);
    if (has_sc_skips(cfg.variant)) {
      SCConvConfig sc = cfg.sc;
      sc.in_channels = c;
      sc.out_channels = c;
      net.skip.push_back(SCConvParams<T>::create(sc, rng));
    } else {
      net.skip.push_back(std::nullopt);
    }
    net.up.push_back(ConvTranspose3dParams<T>::create(cfg.channels(l + 1), c, 2, 2, rng));
    std::vector<StageBlock<T>> level;
    for (std::int64_t j = 0; j < cfg.convs_per_stage; ++j) {
      level.push_back(make_block<T>(cfg, j == 0 ? 2 * c : c, c, rng));
    }
    net.decoder.push_back(std::move(level));
  }

  for (std::int64_t i = 0; i < cfg.head_count(); ++i) {
    // Heads emit logits, so they are initialized without the ReLU gain.
    net.heads.push_back(Conv3dParams<T>::create(cfg.channels(i), cfg.num_regions, 1, rng, 1, 1, 1.0));
  }

  ParamList<T>& reg = net.params;
  for (std::int64_t l = 0; l < depth; ++l) {
    const std::string lv = std::to_string(l);
    if (l > 0) append_params(reg, "down" + lv, net.down[l - 1]);
    for (std::size_t j = 0; j < net.encoder[l].size(); ++j) {
      append_block(reg, "enc" + lv + ".block" + std::to_string(j), net.encoder[l][j]);
    }
  }
  for (std::int64_t l = depth - 2; l >= 0; --l) {
    const std::string lv = std::to_string(l);
    if (net.skip[l]) append_params(reg, "skip" + lv + ".sc", *net.skip[l]);
    append_params(reg, "up" + lv, net.up[l]);
    for (std::size_t j = 0; j < net.decoder[l].size(); ++j) {
      append_block(reg, "dec" + lv + ".block" + std::to_string(j), net.decoder[l][j]);
    }
  }
  for (std::size_t i = 0; i < net.heads.size(); ++i) {
    append_params(reg, "head" + std::to_string(i), net.heads[i]);
  }
  return net;
}

template <typename T>
std::vector<Tensor<T>> forward(const Network<T>& net, const Tensor<T>& x, ForwardTrace<T>* trace) {
  const UNetConfig& cfg = net.cfg;
  const Dims3 in = spatial_dims(x, "unet forward");
  const std::int64_t s = cfg.patch_size;
  if (x.shape()[1] != cfg.in_channels || !(in == Dims3{s, s, s})) {
    throw ShapeError("unet forward: expected [B, " + std::to_string(cfg.in_channels) + ", " +
                     std::to_string(s) + ", " + std::to_string(s) + ", " + std::to_string(s) +
                     "], got " + x.shape().str());
  }
  const std::int64_t depth = cfg.depth;
  std::vector<Tensor<T>> skips;
  Tensor<T> h = x;
  for (std::int64_t l = 0; l < depth; ++l) {
    if (l > 0) h = conv_norm_act(h, net.down[l - 1], cfg.act_slope);
    for (const auto& block : net.encoder[l]) h = apply_block(h, block, cfg.act_slope);
    if (l + 1 < depth) {
      skips.push_back(net.skip[l] ? sc_conv_forward(h, *net.skip[l]) : h);
    }
  }

  std::vector<Tensor<T>> level_out(depth);
  level_out[depth - 1] = h;
  for (std::int64_t l = depth - 2; l >= 0; --l) {
    h = concat_channels(conv_transpose3d(h, net.up[l]), skips[l]);
    for (const auto& block : net.decoder[l]) h = apply_block(h, block, cfg.act_slope);
    level_out[l] = h;
  }

  std::vector<Tensor<T>> logits;
  for (std::size_t i = 0; i < net.heads.size(); ++i) {
    logits.push_back(conv3d(level_out[i], net.heads[i]));
  }
  if (trace != nullptr) trace->skips = std::move(skips);
  return logits;
}

template <typename T>
std::int64_t parameter_count(const Network<T>& net) {
  std::int64_t n = 0;
  for (const auto& p : net.params) n += p.tensor.numel();
  return n;
}

#define SCSEG_INSTANTIATE(T)                                                                 \
  template Network<T> build_network<T>(const UNetConfig&, std::uint64_t);                   \
  template std::vector<Tensor<T>> forward<T>(const Network<T>&, const Tensor<T>&,           \
                                             ForwardTrace<T>*);                             \
  template std::int64_t parameter_count<T>(const Network<T>&);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg
