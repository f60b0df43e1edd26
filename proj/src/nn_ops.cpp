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
#include "scseg/nn_ops.hpp"

#include <cmath>
#include <memory>

#include "scseg/errors.hpp"
#include "scseg/ops.hpp"
#include "scseg/parallel.hpp"

namespace scseg {

using kernels::ConvGeometry;
using parallel::parallel_for;

template <typename T>
Dims3 spatial_dims(const Tensor<T>& x, const char* op) {
  if (x.shape().rank() != 5) {
    throw ShapeError(std::string(op) + ": expected [B,C,D,H,W], got " + x.shape().str());
  }
  return {x.shape()[2], x.shape()[3], x.shape()[4]};
}

namespace {

template <typename T>
std::vector<T> he_normal(std::int64_t count, double fan_in, double slope, Rng& rng) {
  const double stddev = std::sqrt(2.0 / ((1.0 + slope * slope) * fan_in));
  std::vector<T> w(count);
  for (auto& v : w) v = static_cast<T>(rng.normal() * stddev);
  return w;
}

// Adds per-channel sums of g ([B, C, spatial]) into db.
template <typename T>
void channel_sums_acc(std::span<const T> g, std::int64_t batch, std::int64_t channels,
                      std::int64_t spatial, std::span<T> db) {
  for (std::int64_t c = 0; c < channels; ++c) {
    double s = 0.0;
    for (std::int64_t b = 0; b < batch; ++b) {
      const T* row = g.data() + (b * channels + c) * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) s += row[i];
    }
    db[c] += static_cast<T>(s);
  }
}

}  // namespace

template <typename T>
Conv3dParams<T> Conv3dParams<T>::create(std::int64_t in_channels, std::int64_t out_channels,
                                        std::int64_t kernel, Rng& rng, std::int64_t stride,
                                        std::int64_t groups, double act_slope) {
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ShapeError("Conv3dParams: channels not divisible by groups");
  }
  const std::int64_t cin_g = in_channels / groups;
  const Shape wshape{out_channels, cin_g, kernel, kernel, kernel};
  Conv3dParams p;
  p.weight = Tensor<T>(wshape,
                       he_normal<T>(wshape.numel(), double(cin_g * kernel * kernel * kernel),
                                    act_slope, rng),
                       true);
  p.bias = Tensor<T>::zeros(Shape{out_channels}, true);
  p.stride = {stride, stride, stride};
  const std::int64_t pad = (kernel - 1) / 2;
  p.padding = {pad, pad, pad};
  p.groups = groups;
  return p;
}

template <typename T>
ConvTranspose3dParams<T> ConvTranspose3dParams<T>::create(std::int64_t in_channels,
                                                          std::int64_t out_channels,
                                                          std::int64_t kernel, std::int64_t stride,
                                                          Rng& rng) {
  const Shape wshape{in_channels, out_channels, kernel, kernel, kernel};
  const double taps = double(kernel * kernel * kernel) / double(stride * stride * stride);
  ConvTranspose3dParams p;
  p.weight = Tensor<T>(wshape, he_normal<T>(wshape.numel(), in_channels * taps, 0.01, rng), true);
  p.bias = Tensor<T>::zeros(Shape{out_channels}, true);
  p.stride = {stride, stride, stride};
  return p;
}

template <typename T>
InstanceNormParams<T> InstanceNormParams<T>::create(std::int64_t channels) {
  InstanceNormParams p;
  p.gamma = Tensor<T>::full(Shape{channels}, T(1), true);
  p.beta = Tensor<T>::zeros(Shape{channels}, true);
  return p;
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Conv3dParams<T>& p) {
  const Dims3 in = spatial_dims(x, "conv3d");
  if (p.weight.shape().rank() != 5) throw ShapeError("conv3d: weight must be rank 5");
  if (x.shape()[1] != p.in_channels()) {
    throw ShapeError("conv3d: input has " + std::to_string(x.shape()[1]) +
                     " channels, weight expects " + std::to_string(p.in_channels()));
  }
  if (p.bias.numel() != p.out_channels()) throw ShapeError("conv3d: bias size mismatch");
  const auto g = ConvGeometry::make(x.shape()[0], x.shape()[1], in, p.out_channels(), p.kernel(),
                                    p.stride, p.padding, p.groups);
  std::vector<T> y(g.batch * g.out_channels * g.out.volume());
  kernels::conv3d_forward<T>(g, x.values(), p.weight.values(), p.bias.values(), y);
  const Shape out_shape{g.batch, g.out_channels, g.out.d, g.out.h, g.out.w};
  return make_result<T>("conv3d", out_shape, std::move(y), {x, p.weight, p.bias},
                        [g](detail::Node<T>& self) {
                          auto& nx = self.inputs[0];
                          auto& nw = self.inputs[1];
                          auto& nb = self.inputs[2];
                          if (nx->requires_grad) {
                            kernels::conv3d_backward_input<T>(g, self.grad, nw->value,
                                                              nx->ensure_grad());
                          }
                          if (nw->requires_grad || nb->requires_grad) {
                            kernels::conv3d_backward_weight<T>(
                                g, nx->value, self.grad,
                                nw->requires_grad ? nw->ensure_grad() : std::span<T>{},
                                nb->requires_grad ? nb->ensure_grad() : std::span<T>{});
                          }
                        });
}

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& x, const ConvTranspose3dParams<T>& p) {
  const Dims3 in = spatial_dims(x, "conv_transpose3d");
  if (p.weight.shape().rank() != 5) throw ShapeError("conv_transpose3d: weight must be rank 5");
  if (x.shape()[1] != p.in_channels()) {
    throw ShapeError("conv_transpose3d: input has " + std::to_string(x.shape()[1]) +
                     " channels, weight expects " + std::to_string(p.in_channels()));
  }
  if (p.bias.numel() != p.out_channels()) {
    throw ShapeError("conv_transpose3d: bias size mismatch");
  }
  const Dims3 k = p.kernel();
  auto extent = [](std::int64_t n, std::int64_t s, std::int64_t pad, std::int64_t kk) {
    return (n - 1) * s - 2 * pad + kk;
  };
  const Dims3 out{extent(in.d, p.stride.d, p.padding.d, k.d),
                  extent(in.h, p.stride.h, p.padding.h, k.h),
                  extent(in.w, p.stride.w, p.padding.w, k.w)};
  if (out.d < 1 || out.h < 1 || out.w < 1) {
    throw ShapeError("conv_transpose3d: non-positive output extent " + out.str());
  }
  const std::int64_t batch = x.shape()[0];
  const std::int64_t cout = p.out_channels();
  // Forward conv mapping this op's output grid back onto its input grid.
  const auto g =
      ConvGeometry::make(batch, cout, out, p.in_channels(), k, p.stride, p.padding, p.groups);
  if (!(g.out == in)) throw ShapeError("conv_transpose3d: inconsistent geometry");
  std::vector<T> y(batch * cout * out.volume(), T(0));
  kernels::conv3d_backward_input<T>(g, x.values(), p.weight.values(), y);
  const std::int64_t vol = out.volume();
  auto bias = p.bias.values();
  parallel_for(batch * cout, [&](std::int64_t s) {
    const T b = bias[s % cout];
    for (std::int64_t i = 0; i < vol; ++i) y[s * vol + i] += b;
  }, vol);
  const Shape out_shape{batch, cout, out.d, out.h, out.w};
  return make_result<T>(
      "conv_transpose3d", out_shape, std::move(y), {x, p.weight, p.bias},
      [g, batch, cout, vol](detail::Node<T>& self) {
        auto& nx = self.inputs[0];
        auto& nw = self.inputs[1];
        auto& nb = self.inputs[2];
        if (nx->requires_grad) {
          std::vector<T> dx(nx->value.size());
          kernels::conv3d_forward<T>(g, self.grad, nw->value, {}, dx);
          nx->accumulate(dx);
        }
        if (nw->requires_grad) {
          kernels::conv3d_backward_weight<T>(g, self.grad, nx->value, nw->ensure_grad(), {});
        }
        if (nb->requires_grad) {
          channel_sums_acc<T>(self.grad, batch, cout, vol, nb->ensure_grad());
        }
      });
}

template <typename T>
Tensor<T> avg_pool3d(const Tensor<T>& x, std::int64_t r) {
  const Dims3 in = spatial_dims(x, "avg_pool3d");
  if (r < 1) throw ShapeError("avg_pool3d: rate must be positive");
  if (in.d % r || in.h % r || in.w % r) {
    throw ShapeError("avg_pool3d: spatial extent " + in.str() + " not divisible by " +
                     std::to_string(r));
  }
  const std::int64_t slices = x.shape()[0] * x.shape()[1];
  const Dims3 out{in.d / r, in.h / r, in.w / r};
  std::vector<T> y(slices * out.volume());
  kernels::avg_pool3d_forward<T>(slices, in, r, x.values(), y);
  const Shape out_shape{x.shape()[0], x.shape()[1], out.d, out.h, out.w};
  return make_result<T>("avg_pool3d", out_shape, std::move(y), {x},
                        [slices, in, r](detail::Node<T>& self) {
                          kernels::avg_pool3d_backward<T>(slices, in, r, self.grad,
                                                          self.inputs[0]->ensure_grad());
                        });
}

template <typename T>
Tensor<T> upsample3d(const Tensor<T>& x, std::int64_t r, Interp mode) {
  const Dims3 in = spatial_dims(x, "upsample3d");
  if (r < 1) throw ShapeError("upsample3d: factor must be positive");
  const std::int64_t slices = x.shape()[0] * x.shape()[1];
  const Dims3 out{in.d * r, in.h * r, in.w * r};
  std::vector<T> y(slices * out.volume());
  kernels::upsample3d_forward<T>(slices, in, r, mode, x.values(), y);
  const Shape out_shape{x.shape()[0], x.shape()[1], out.d, out.h, out.w};
  return make_result<T>("upsample3d", out_shape, std::move(y), {x},
                        [slices, in, r, mode](detail::Node<T>& self) {
                          kernels::upsample3d_backward<T>(slices, in, r, mode, self.grad,
                                                          self.inputs[0]->ensure_grad());
                        });
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const InstanceNormParams<T>& p) {
  spatial_dims(x, "instance_norm");
  const std::int64_t batch = x.shape()[0];
  const std::int64_t channels = x.shape()[1];
  if (p.gamma.numel() != channels || p.beta.numel() != channels) {
    throw ShapeError("instance_norm: affine parameters sized " + std::to_string(p.gamma.numel()) +
                     " for " + std::to_string(channels) + " channels");
  }
  if (!(p.eps > 0.0)) throw ShapeError("instance_norm: eps must be positive");
  const std::int64_t spatial = x.numel() / (batch * channels);
  auto stats = std::make_shared<std::vector<double>>(2 * batch * channels);
  std::span<double> mean(stats->data(), batch * channels);
  std::span<double> inv_std(stats->data() + batch * channels, batch * channels);
  std::vector<T> y(x.numel());
  kernels::instance_norm_forward<T>(batch, channels, spatial, x.values(), p.gamma.values(),
                                    p.beta.values(), p.eps, y, mean, inv_std);
  return make_result<T>(
      "instance_norm", x.shape(), std::move(y), {x, p.gamma, p.beta},
      [batch, channels, spatial, stats](detail::Node<T>& self) {
        auto& nx = self.inputs[0];
        auto& ng = self.inputs[1];
        auto& nb = self.inputs[2];
        const std::int64_t slices = batch * channels;
        std::span<const double> mean(stats->data(), slices);
        std::span<const double> inv_std(stats->data() + slices, slices);
        kernels::instance_norm_backward<T>(
            batch, channels, spatial, nx->value, ng->value, mean, inv_std, self.grad,
            nx->requires_grad ? nx->ensure_grad() : std::span<T>{},
            ng->requires_grad ? ng->ensure_grad() : std::span<T>{},
            nb->requires_grad ? nb->ensure_grad() : std::span<T>{});
      });
}

template <typename T>
Tensor<T> conv_norm(const Tensor<T>& x, const ConvNormBlock<T>& b) {
  return instance_norm(conv3d(x, b.conv), b.norm);
}

template <typename T>
Tensor<T> conv_norm_act(const Tensor<T>& x, const ConvNormBlock<T>& b, double slope) {
  return leaky_relu(conv_norm(x, b), static_cast<T>(slope));
}

#define SCSEG_INSTANTIATE(T)                                                              \
  template struct Conv3dParams<T>;                                                        \
  template struct ConvTranspose3dParams<T>;                                               \
  template struct InstanceNormParams<T>;                                                  \
  template Dims3 spatial_dims<T>(const Tensor<T>&, const char*);                          \
  template Tensor<T> conv3d<T>(const Tensor<T>&, const Conv3dParams<T>&);                 \
  template Tensor<T> conv_transpose3d<T>(const Tensor<T>&, const ConvTranspose3dParams<T>&); \
  template Tensor<T> avg_pool3d<T>(const Tensor<T>&, std::int64_t);                       \
  template Tensor<T> upsample3d<T>(const Tensor<T>&, std::int64_t, Interp);               \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, const InstanceNormParams<T>&);        \
  template Tensor<T> conv_norm<T>(const Tensor<T>&, const ConvNormBlock<T>&);                 \
  template Tensor<T> conv_norm_act<T>(const Tensor<T>&, const ConvNormBlock<T>&, double);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg
