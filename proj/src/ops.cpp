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
#include "scseg/ops.hpp"

#include <algorithm>
#include <cmath>

#include "scseg/errors.hpp"
#include "scseg/parallel.hpp"

namespace scseg {

using parallel::parallel_for;

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

template <typename T>
bool wants_grad(const std::shared_ptr<detail::Node<T>>& n) {
  return n->requires_grad;
}

// Channel-blocked view of a tensor with layout [batch, channel, rest...].
struct ChannelLayout {
  std::int64_t batch;
  std::int64_t channels;
  std::int64_t inner;
};

template <typename T>
ChannelLayout channel_layout(const Tensor<T>& x, const char* op) {
  if (x.shape().rank() < 2) {
    throw ShapeError(std::string(op) + ": needs [batch, channel, ...] layout, got " +
                     x.shape().str());
  }
  const auto& d = x.shape().dims();
  std::int64_t inner = 1;
  for (std::size_t i = 2; i < d.size(); ++i) inner *= d[i];
  return {d[0], d[1], inner};
}

thread_local KinkMonitor* t_kink_monitor = nullptr;

}  // namespace

KinkMonitor::KinkMonitor(Mode mode) : mode_(mode), previous_(t_kink_monitor) {
  t_kink_monitor = this;
}
KinkMonitor::~KinkMonitor() { t_kink_monitor = previous_; }
KinkMonitor* KinkMonitor::active() { return t_kink_monitor; }

void KinkMonitor::compare_against_recording() {
  mode_ = Mode::Compare;
  cursor_ = 0;
  crossed_ = false;
}

void KinkMonitor::observe_sign(bool non_negative) {
  if (mode_ == Mode::Record) {
    signs_.push_back(non_negative);
    return;
  }
  if (cursor_ >= signs_.size() || signs_[cursor_] != non_negative) crossed_ = true;
  ++cursor_;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  const auto n = a.numel();
  std::vector<T> out(n);
  auto av = a.values();
  auto bv = b.values();
  parallel_for(n, [&](std::int64_t i) { out[i] = av[i] + bv[i]; });
  return make_result<T>("add", a.shape(), std::move(out), {a, b}, [](detail::Node<T>& self) {
    for (auto& in : self.inputs) {
      if (wants_grad(in)) in->accumulate(self.grad);
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  const auto n = a.numel();
  std::vector<T> out(n);
  auto av = a.values();
  auto bv = b.values();
  parallel_for(n, [&](std::int64_t i) { out[i] = av[i] * bv[i]; });
  return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [n](detail::Node<T>& self) {
    auto& na = self.inputs[0];
    auto& nb = self.inputs[1];
    const auto& g = self.grad;
    if (wants_grad(na)) {
      auto ga = na->ensure_grad();
      const auto& bv = nb->value;
      parallel_for(n, [&](std::int64_t i) { ga[i] += g[i] * bv[i]; });
    }
    if (wants_grad(nb)) {
      auto gb = nb->ensure_grad();
      const auto& av = na->value;
      parallel_for(n, [&](std::int64_t i) { gb[i] += g[i] * av[i]; });
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  const auto n = a.numel();
  std::vector<T> out(n);
  auto av = a.values();
  parallel_for(n, [&](std::int64_t i) { out[i] = av[i] * factor; });
  return make_result<T>("scale", a.shape(), std::move(out), {a}, [n, factor](detail::Node<T>& self) {
    auto ga = self.inputs[0]->ensure_grad();
    const auto& g = self.grad;
    parallel_for(n, [&](std::int64_t i) { ga[i] += g[i] * factor; });
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  const auto n = x.numel();
  std::vector<T> out(n);
  auto xv = x.values();
  parallel_for(n, [&](std::int64_t i) {
    const T v = xv[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  });
  return make_result<T>("sigmoid", x.shape(), std::move(out), {x}, [n](detail::Node<T>& self) {
    auto gx = self.inputs[0]->ensure_grad();
    const auto& y = self.value;
    const auto& g = self.grad;
    parallel_for(n, [&](std::int64_t i) { gx[i] += g[i] * y[i] * (T(1) - y[i]); });
  });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  if (!(slope >= T(0))) throw ShapeError("leaky_relu: slope must be non-negative");
  const auto n = x.numel();
  std::vector<T> out(n);
  auto xv = x.values();
  parallel_for(n, [&](std::int64_t i) { out[i] = xv[i] >= T(0) ? xv[i] : slope * xv[i]; });
  if (auto* monitor = KinkMonitor::active()) {
    for (T v : xv) monitor->observe_sign(v >= T(0));
  }
  return make_result<T>("leaky_relu", x.shape(), std::move(out), {x},
                        [n, slope](detail::Node<T>& self) {
                          auto& in = self.inputs[0];
                          auto gx = in->ensure_grad();
                          const auto& xv = in->value;
                          const auto& g = self.grad;
                          parallel_for(n, [&](std::int64_t i) {
                            gx[i] += xv[i] >= T(0) ? g[i] : slope * g[i];
                          });
                        });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const auto la = channel_layout(a, "concat_channels");
  const auto lb = channel_layout(b, "concat_channels");
  const auto& da = a.shape().dims();
  const auto& db = b.shape().dims();
  bool compatible = da.size() == db.size();
  for (std::size_t i = 0; compatible && i < da.size(); ++i) {
    if (i != 1 && da[i] != db[i]) compatible = false;
  }
  if (!compatible) {
    throw ShapeError("concat_channels: non-channel extents differ " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  auto dims = da;
  dims[1] = la.channels + lb.channels;
  const std::int64_t block_a = la.channels * la.inner;
  const std::int64_t block_b = lb.channels * lb.inner;
  std::vector<T> out(static_cast<std::size_t>(la.batch * (block_a + block_b)));
  auto av = a.values();
  auto bv = b.values();
  for (std::int64_t n = 0; n < la.batch; ++n) {
    std::copy_n(av.begin() + n * block_a, block_a, out.begin() + n * (block_a + block_b));
    std::copy_n(bv.begin() + n * block_b, block_b,
                out.begin() + n * (block_a + block_b) + block_a);
  }
  return make_result<T>("concat_channels", Shape(dims), std::move(out), {a, b},
                        [batch = la.batch, block_a, block_b](detail::Node<T>& self) {
                          const auto& g = self.grad;
                          const std::int64_t stride = block_a + block_b;
                          auto& na = self.inputs[0];
                          auto& nb = self.inputs[1];
                          if (wants_grad(na)) {
                            auto ga = na->ensure_grad();
                            for (std::int64_t n = 0; n < batch; ++n)
                              for (std::int64_t i = 0; i < block_a; ++i)
                                ga[n * block_a + i] += g[n * stride + i];
                          }
                          if (wants_grad(nb)) {
                            auto gb = nb->ensure_grad();
                            for (std::int64_t n = 0; n < batch; ++n)
                              for (std::int64_t i = 0; i < block_b; ++i)
                                gb[n * block_b + i] += g[n * stride + block_a + i];
                          }
                        });
}

namespace {

template <typename T>
Tensor<T> channel_slice(const Tensor<T>& x, std::int64_t begin, std::int64_t end) {
  const auto l = channel_layout(x, "split_channels");
  auto dims = x.shape().dims();
  dims[1] = end - begin;
  const std::int64_t in_block = l.channels * l.inner;
  const std::int64_t out_block = (end - begin) * l.inner;
  const std::int64_t offset = begin * l.inner;
  std::vector<T> out(static_cast<std::size_t>(l.batch * out_block));
  auto xv = x.values();
  for (std::int64_t n = 0; n < l.batch; ++n) {
    std::copy_n(xv.begin() + n * in_block + offset, out_block, out.begin() + n * out_block);
  }
  return make_result<T>("split_channels", Shape(dims), std::move(out), {x},
                        [batch = l.batch, in_block, out_block, offset](detail::Node<T>& self) {
                          auto gx = self.inputs[0]->ensure_grad();
                          const auto& g = self.grad;
                          for (std::int64_t n = 0; n < batch; ++n)
                            for (std::int64_t i = 0; i < out_block; ++i)
                              gx[n * in_block + offset + i] += g[n * out_block + i];
                        });
}

}  // namespace

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::int64_t k) {
  const auto l = channel_layout(x, "split_channels");
  if (k <= 0 || k >= l.channels) {
    throw ShapeError("split_channels: k=" + std::to_string(k) + " outside (0, " +
                     std::to_string(l.channels) + ")");
  }
  return {channel_slice(x, 0, k), channel_slice(x, k, l.channels)};
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  const double s = parallel::sum<T>(x.values());
  return make_result<T>("sum", Shape{1}, {static_cast<T>(s)}, {x}, [](detail::Node<T>& self) {
    auto gx = self.inputs[0]->ensure_grad();
    const T g = self.grad[0];
    const auto n = static_cast<std::int64_t>(gx.size());
    parallel_for(n, [&](std::int64_t i) { gx[i] += g; });
  });
}

#define SCSEG_INSTANTIATE(T)                                                          \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                   \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                    \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                              \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);          \
  template std::pair<Tensor<T>, Tensor<T>> split_channels<T>(const Tensor<T>&,        \
                                                             std::int64_t);           \
  template Tensor<T> sum<T>(const Tensor<T>&);

SCSEG_INSTANTIATE(float)
SCSEG_INSTANTIATE(double)
#undef SCSEG_INSTANTIATE

}  // namespace scseg
