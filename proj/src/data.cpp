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
#include "scseg/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numbers>
#include <nlohmann/json.hpp>

#include "scseg/errors.hpp"
#include "scseg/rng.hpp"

namespace scseg {

static_assert(std::endian::native == std::endian::little,
              "volume files are written in host order, which must be little-endian");

namespace fs = std::filesystem;
using kernels::Dims3;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVolumeMagic = "scseg-volume";

std::uint64_t file_size_or_missing(const fs::path& p) {
  std::error_code ec;
  const auto n = fs::file_size(p, ec);
  if (ec) throw DataError(DataError::Kind::Missing, "missing file " + p.string());
  return n;
}

}  // namespace

void PhantomSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("phantom: " + what); };
  if (grid < 8) fail("grid must be >= 8");
  if (!(brain_fraction > 0.0 && brain_fraction <= 0.5)) fail("brain_fraction must be in (0, 0.5]");
  if (!(center_jitter >= 0.0 && center_jitter < 0.5)) fail("center_jitter must be in [0, 0.5)");
  if (!(wt_radius_min > 0.0 && wt_radius_min <= wt_radius_max)) {
    fail("radii misordered: need 0 < wt_radius_min <= wt_radius_max");
  }
  if (!(0.0 < ncr_fraction && ncr_fraction < tc_fraction && tc_fraction < 1.0)) {
    fail("radii misordered: need 0 < ncr_fraction < tc_fraction < 1 "
         "(NCR core inside ET rim inside tumor core inside whole tumor)");
  }
  if (!(deformation >= 0.0 && deformation < 0.5)) fail("deformation must be in [0, 0.5)");
  if (2.0 * wt_radius_max * (1.0 + deformation) >= static_cast<double>(grid)) {
    fail("whole tumor (2 * wt_radius_max * (1 + deformation)) does not fit in the grid");
  }
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
  if (!(contrast_gap >= 0.0)) fail("contrast_gap must be >= 0");
  if (means[kTissueET][1] - means[kTissueNCR][1] < contrast_gap) {
    fail("T1Gd means must keep ET - NCR >= contrast_gap");
  }
  if (num_cases < 2) fail("num_cases must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must be in (0, 1)");
}

std::string case_id_for(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03lld", static_cast<long long>(index));
  return buf;
}

CaseVolume generate_phantom(const PhantomSpec& spec, std::uint64_t case_seed,
                            const std::string& case_id) {
  spec.validate();
  Rng rng(case_seed);
  const std::int64_t g = spec.grid;
  const double mid = (static_cast<double>(g) - 1.0) / 2.0;

  std::array<double, 3> brain_axes{}, center{}, axes{};
  for (auto& a : brain_axes) a = spec.brain_fraction * g * rng.uniform(0.92, 1.05);
  for (auto& c : center) c = mid + rng.uniform(-1.0, 1.0) * spec.center_jitter * g;
  for (auto& a : axes) a = rng.uniform(spec.wt_radius_min, spec.wt_radius_max);

  // One direction-dependent radial factor shared by every boundary, so the
  // shells stay nested however much they wobble.
  struct Wave {
    std::array<double, 3> dir;
    double freq, phase, amp;
  };
  std::array<Wave, 3> waves{};
  for (auto& w : waves) {
    double norm = 0.0;
    for (auto& c : w.dir) {
      c = rng.normal();
      norm += c * c;
    }
    norm = std::sqrt(norm);
    for (auto& c : w.dir) c = norm > 0 ? c / norm : 1.0;
    w.freq = rng.uniform(1.5, 3.5);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.amp = spec.deformation / 3.0 * rng.uniform(0.5, 1.0);
  }
  std::array<double, kNumModalities> gain{};
  for (auto& v : gain) v = rng.uniform(0.9, 1.1);

  CaseVolume v;
  v.case_id = case_id;
  v.extents = {g, g, g};
  const std::int64_t n = g * g * g;
  v.intensities.assign(kNumModalities * n, 0.0f);
  v.labels = LabelVolume::empty(v.extents);

  std::int64_t i = 0;
  for (std::int64_t z = 0; z < g; ++z)
    for (std::int64_t y = 0; y < g; ++y)
      for (std::int64_t x = 0; x < g; ++x, ++i) {
        const std::array<double, 3> pos{double(z), double(y), double(x)};
        double brain = 0.0, rho2 = 0.0;
        std::array<double, 3> q{};
        for (int a = 0; a < 3; ++a) {
          const double b = (pos[a] - mid) / brain_axes[a];
          brain += b * b;
          q[a] = (pos[a] - center[a]) / axes[a];
          rho2 += q[a] * q[a];
        }
        const bool in_brain = brain <= 1.0;
        const double rho = std::sqrt(rho2);
        double f = 1.0;
        if (rho > 0.0) {
          for (const auto& w : waves) {
            const double proj = (q[0] * w.dir[0] + q[1] * w.dir[1] + q[2] * w.dir[2]) / rho;
            f += w.amp * std::sin(w.freq * proj + w.phase);
          }
        }
        const double d = rho / f;
        std::uint8_t label = kBackground;
        if (in_brain) {
          if (d < spec.ncr_fraction) label = kNCR;
          else if (d < spec.tc_fraction) label = kET;
          else if (d < 1.0) label = kED;
        }
        v.labels.voxels[i] = label;

        int tissue = -1;
        switch (label) {
          case kNCR: tissue = kTissueNCR; break;
          case kET: tissue = kTissueET; break;
          case kED: tissue = kTissueED; break;
          default: tissue = in_brain ? kTissueBrain : -1;
        }
        for (int c = 0; c < kNumModalities; ++c) {
          const double mean = tissue < 0 ? 0.0 : spec.means[tissue][c] * gain[c];
          v.intensities[c * n + i] = static_cast<float>(mean + spec.noise_std * rng.normal());
        }
      }
  return v;
}

CaseVolume zscore_normalize(const CaseVolume& v) {
  CaseVolume out = v;
  const std::int64_t n = v.extents.volume();
  for (int c = 0; c < kNumModalities; ++c) {
    const float* src = v.intensities.data() + c * n;
    double mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mean += src[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    float* dst = out.intensities.data() + c * n;
    for (std::int64_t i = 0; i < n; ++i) dst[i] = static_cast<float>((src[i] - mean) / (sd + 1e-8));
  }
  return out;
}

namespace {

template <typename V>
std::vector<V> pad_buffer(const std::vector<V>& src, std::int64_t channels, Dims3 in, Dims3 out,
                          Dims3 before) {
  std::vector<V> dst(channels * out.volume(), V{});
  for (std::int64_t c = 0; c < channels; ++c)
    for (std::int64_t z = 0; z < in.d; ++z)
      for (std::int64_t y = 0; y < in.h; ++y) {
        const V* s = src.data() + ((c * in.d + z) * in.h + y) * in.w;
        V* d = dst.data() + ((c * out.d + z + before.d) * out.h + y + before.h) * out.w + before.w;
        std::copy(s, s + in.w, d);
      }
  return dst;
}

}  // namespace

PaddedCase pad_to_divisible(const CaseVolume& v, std::int64_t divisor, std::int64_t min_extent) {
  if (divisor < 1) throw ShapeError("pad_to_divisible: divisor must be >= 1");
  auto target = [&](std::int64_t e) {
    const std::int64_t t = std::max(e, min_extent);
    return (t + divisor - 1) / divisor * divisor;
  };
  const Dims3 in = v.extents;
  const Dims3 out{target(in.d), target(in.h), target(in.w)};
  PaddingRecord rec;
  rec.original = in;
  rec.before = {(out.d - in.d) / 2, (out.h - in.h) / 2, (out.w - in.w) / 2};
  rec.after = {out.d - in.d - rec.before.d, out.h - in.h - rec.before.h,
               out.w - in.w - rec.before.w};
  if (rec.empty()) return {v, rec};
  PaddedCase p{v, rec};
  p.volume.extents = out;
  p.volume.intensities = pad_buffer(v.intensities, kNumModalities, in, out, rec.before);
  p.volume.labels = {out, pad_buffer(v.labels.voxels, 1, in, out, rec.before)};
  return p;
}

template <typename V>
std::vector<V> crop_back(const std::vector<V>& padded, std::int64_t channels, Dims3 padded_extents,
                         const PaddingRecord& record) {
  const Dims3 in = padded_extents, out = record.original;
  if (static_cast<std::int64_t>(padded.size()) != channels * in.volume() ||
      in.d != out.d + record.before.d + record.after.d ||
      in.h != out.h + record.before.h + record.after.h ||
      in.w != out.w + record.before.w + record.after.w) {
    throw ShapeError("crop_back: padding record does not match buffer geometry");
  }
  std::vector<V> dst(channels * out.volume());
  for (std::int64_t c = 0; c < channels; ++c)
    for (std::int64_t z = 0; z < out.d; ++z)
      for (std::int64_t y = 0; y < out.h; ++y) {
        const V* s = padded.data() +
                     ((c * in.d + z + record.before.d) * in.h + y + record.before.h) * in.w +
                     record.before.w;
        std::copy(s, s + out.w, dst.data() + ((c * out.d + z) * out.h + y) * out.w);
      }
  return dst;
}

template std::vector<float> crop_back<float>(const std::vector<float>&, std::int64_t, Dims3,
                                             const PaddingRecord&);
template std::vector<std::uint8_t> crop_back<std::uint8_t>(const std::vector<std::uint8_t>&,
                                                           std::int64_t, Dims3,
                                                           const PaddingRecord&);

CaseVolume crop_back(const CaseVolume& padded, const PaddingRecord& record) {
  CaseVolume out = padded;
  out.extents = record.original;
  out.intensities = crop_back(padded.intensities, kNumModalities, padded.extents, record);
  out.labels = {record.original, crop_back(padded.labels.voxels, 1, padded.extents, record)};
  return out;
}

Patch extract_patch(const CaseVolume& v, std::int64_t size, PatchPolicy policy, std::uint64_t seed,
                    double foreground_prob) {
  const Dims3 e = v.extents;
  if (size < 1 || size > e.d || size > e.h || size > e.w) {
    throw ShapeError("extract_patch: patch size " + std::to_string(size) + " does not fit volume " +
                     e.str());
  }
  Dims3 start{(e.d - size) / 2, (e.h - size) / 2, (e.w - size) / 2};
  if (policy == PatchPolicy::RandomForeground) {
    Rng rng(seed);
    bool placed = false;
    if (rng.bernoulli(foreground_prob)) {
      std::vector<std::int64_t> tumor;
      for (std::size_t i = 0; i < v.labels.voxels.size(); ++i) {
        if (v.labels.voxels[i] != kBackground) tumor.push_back(static_cast<std::int64_t>(i));
      }
      if (!tumor.empty()) {
        const std::int64_t i = tumor[rng.below(tumor.size())];
        const std::int64_t cz = i / (e.h * e.w), cy = i / e.w % e.h, cx = i % e.w;
        auto clamp_start = [size](std::int64_t c, std::int64_t ext) {
          return std::clamp<std::int64_t>(c - size / 2, 0, ext - size);
        };
        start = {clamp_start(cz, e.d), clamp_start(cy, e.h), clamp_start(cx, e.w)};
        placed = true;
      }
    }
    if (!placed) {
      start = {static_cast<std::int64_t>(rng.below(e.d - size + 1)),
               static_cast<std::int64_t>(rng.below(e.h - size + 1)),
               static_cast<std::int64_t>(rng.below(e.w - size + 1))};
    }
  }

  Patch p;
  p.size = size;
  const std::int64_t pv = size * size * size;
  p.intensities.resize(kNumModalities * pv);
  p.labels.resize(pv);
  for (int c = 0; c <= kNumModalities; ++c)
    for (std::int64_t z = 0; z < size; ++z)
      for (std::int64_t y = 0; y < size; ++y) {
        const std::int64_t src = ((start.d + z) * e.h + start.h + y) * e.w + start.w;
        const std::int64_t dst = (z * size + y) * size;
        if (c < kNumModalities) {
          const float* s = v.intensities.data() + c * e.volume() + src;
          std::copy(s, s + size, p.intensities.data() + c * pv + dst);
        } else {
          const std::uint8_t* s = v.labels.voxels.data() + src;
          std::copy(s, s + size, p.labels.data() + dst);
        }
      }
  return p;
}

FlipMask draw_flip_mask(std::uint64_t seed) {
  Rng rng(seed);
  FlipMask m{};
  for (auto& b : m) b = rng.bernoulli(0.5);
  return m;
}

namespace {

template <typename V>
void flip_volume(V* data, std::int64_t s, const FlipMask& mask) {
  std::vector<V> src(data, data + s * s * s);
  for (std::int64_t z = 0; z < s; ++z)
    for (std::int64_t y = 0; y < s; ++y)
      for (std::int64_t x = 0; x < s; ++x) {
        const std::int64_t sz = mask[0] ? s - 1 - z : z;
        const std::int64_t sy = mask[1] ? s - 1 - y : y;
        const std::int64_t sx = mask[2] ? s - 1 - x : x;
        data[(z * s + y) * s + x] = src[(sz * s + sy) * s + sx];
      }
}

}  // namespace

void apply_flip(Patch& patch, const FlipMask& mask) {
  if (!mask[0] && !mask[1] && !mask[2]) return;
  const std::int64_t s = patch.size;
  for (int c = 0; c < kNumModalities; ++c) flip_volume(patch.intensities.data() + c * s * s * s, s, mask);
  flip_volume(patch.labels.data(), s, mask);
}

Patch augment_flip(Patch patch, std::uint64_t seed) {
  apply_flip(patch, draw_flip_mask(seed));
  return patch;
}

void write_case(const fs::path& dir, const CaseVolume& v) {
  const std::int64_t n = v.extents.volume();
  if (static_cast<std::int64_t>(v.intensities.size()) != kNumModalities * n ||
      static_cast<std::int64_t>(v.labels.voxels.size()) != n) {
    throw ShapeError("write_case: buffers do not match extents " + v.extents.str());
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  json h;
  h["magic"] = kVolumeMagic;
  h["format_version"] = kVolumeFormatVersion;
  h["case_id"] = v.case_id;
  h["extents"] = {v.extents.d, v.extents.h, v.extents.w};
  h["channels"] = {kModalityNames[0], kModalityNames[1], kModalityNames[2], kModalityNames[3]};
  h["intensity_file"] = v.case_id + ".vol.raw";
  h["intensity_type"] = "f32le";
  h["label_file"] = v.case_id + ".seg.raw";
  h["label_type"] = "u8";

  std::ofstream hf(dir / (v.case_id + ".vol.json"), std::ios::trunc);
  std::ofstream vf(dir / (v.case_id + ".vol.raw"), std::ios::binary | std::ios::trunc);
  std::ofstream sf(dir / (v.case_id + ".seg.raw"), std::ios::binary | std::ios::trunc);
  if (!hf || !vf || !sf) {
    throw DataError(DataError::Kind::Io, "cannot write case " + v.case_id + " into " + dir.string());
  }
  hf << h.dump(2) << '\n';
  vf.write(reinterpret_cast<const char*>(v.intensities.data()),
           static_cast<std::streamsize>(v.intensities.size() * sizeof(float)));
  sf.write(reinterpret_cast<const char*>(v.labels.voxels.data()),
           static_cast<std::streamsize>(v.labels.voxels.size()));
  hf.flush();
  vf.flush();
  sf.flush();
  if (!hf || !vf || !sf) throw DataError(DataError::Kind::Io, "short write for case " + v.case_id);
}

CaseVolume read_case(const fs::path& dir, const std::string& case_id, std::int64_t* remapped) {
  const fs::path header_path = dir / (case_id + ".vol.json");
  std::ifstream hf(header_path);
  if (!hf) throw DataError(DataError::Kind::Missing, "missing case header " + header_path.string());
  const std::string where = header_path.string();
  auto malformed = [&](const std::string& msg) {
    return DataError(DataError::Kind::MalformedHeader, where + ": " + msg);
  };

  json h;
  try {
    h = json::parse(hf);
  } catch (const json::exception& e) {
    throw malformed(std::string("not valid JSON (") + e.what() + ")");
  }
  if (!h.is_object()) throw malformed("header is not an object");
  if (!h.contains("magic") || !h["magic"].is_string() || h["magic"] != kVolumeMagic) {
    throw DataError(DataError::Kind::BadMagic, where + ": bad magic, expected \"" +
                                                   std::string(kVolumeMagic) + "\"");
  }

  CaseVolume v;
  fs::path vol_file, seg_file;
  try {
    if (h.at("format_version").get<int>() != kVolumeFormatVersion) {
      throw malformed("unsupported format_version");
    }
    v.case_id = h.at("case_id").get<std::string>();
    const auto ext = h.at("extents").get<std::vector<std::int64_t>>();
    if (ext.size() != 3 || ext[0] < 1 || ext[1] < 1 || ext[2] < 1) {
      throw malformed("extents must be three positive integers");
    }
    v.extents = {ext[0], ext[1], ext[2]};
    const auto channels = h.at("channels").get<std::vector<std::string>>();
    if (channels.size() != kNumModalities) throw malformed("expected four channels");
    if (h.at("intensity_type").get<std::string>() != "f32le") throw malformed("intensity_type must be f32le");
    if (h.at("label_type").get<std::string>() != "u8") throw malformed("label_type must be u8");
    vol_file = dir / h.at("intensity_file").get<std::string>();
    seg_file = dir / h.at("label_file").get<std::string>();
  } catch (const json::exception& e) {
    throw malformed(std::string("missing or mistyped field (") + e.what() + ")");
  }
  if (v.case_id != case_id) throw malformed("case_id field is '" + v.case_id + "'");

  const std::int64_t n = v.extents.volume();
  const std::uint64_t want_vol = static_cast<std::uint64_t>(kNumModalities * n) * sizeof(float);
  const std::uint64_t want_seg = static_cast<std::uint64_t>(n);
  const std::uint64_t have_vol = file_size_or_missing(vol_file);
  const std::uint64_t have_seg = file_size_or_missing(seg_file);
  if (have_vol < want_vol) {
    throw DataError(DataError::Kind::Truncated, vol_file.string() + ": " + std::to_string(have_vol) +
                                                    " bytes, expected " + std::to_string(want_vol));
  }
  if (have_seg < want_seg) {
    throw DataError(DataError::Kind::Truncated, seg_file.string() + ": " + std::to_string(have_seg) +
                                                    " bytes, expected " + std::to_string(want_seg));
  }
  if (have_vol != want_vol || have_seg != want_seg) {
    throw malformed("data file larger than the extents declare");
  }

  v.intensities.resize(kNumModalities * n);
  v.labels = LabelVolume::empty(v.extents);
  std::ifstream vf(vol_file, std::ios::binary), sf(seg_file, std::ios::binary);
  vf.read(reinterpret_cast<char*>(v.intensities.data()), static_cast<std::streamsize>(want_vol));
  sf.read(reinterpret_cast<char*>(v.labels.voxels.data()), static_cast<std::streamsize>(want_seg));
  if (!vf || !sf) throw DataError(DataError::Kind::Io, "read failed for case " + case_id);

  std::int64_t legacy = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::uint8_t& l = v.labels.voxels[i];
    if (l == 4) {
      l = kET;
      ++legacy;
    } else if (l > kET) {
      throw DataError(DataError::Kind::BadLabel, seg_file.string() + ": label code " +
                                                     std::to_string(l) + " at voxel " +
                                                     std::to_string(i));
    }
  }
  if (remapped != nullptr) *remapped = legacy;
  return v;
}

std::vector<std::string> DatasetManifest::ids(const std::string& split) const {
  std::vector<std::string> out;
  for (const auto& c : cases) {
    if (c.split == split) out.push_back(c.case_id);
  }
  return out;
}

std::vector<std::string> split_cases(std::size_t n, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  std::vector<std::string> tags(n);
  for (std::size_t k = 0; k < n; ++k) tags[order[k]] = k < n_train ? "train" : "val";
  return tags;
}

void write_manifest(const fs::path& dir, const DatasetManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["seed"] = m.seed;
  j["extents"] = {m.extents.d, m.extents.h, m.extents.w};
  j["cases"] = json::array();
  for (const auto& c : m.cases) j["cases"].push_back({{"case_id", c.case_id}, {"split", c.split}});
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw DataError(DataError::Kind::Io, "cannot write manifest in " + dir.string());
  f << j.dump(2) << '\n';
  if (!f) throw DataError(DataError::Kind::Io, "short write for manifest in " + dir.string());
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream f(path);
  if (!f) throw DataError(DataError::Kind::Missing, "no dataset manifest at " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(f);
    m.format_version = j.at("format_version").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto ext = j.at("extents").get<std::vector<std::int64_t>>();
    if (ext.size() != 3) throw DataError(DataError::Kind::MalformedHeader, path.string() + ": bad extents");
    m.extents = {ext[0], ext[1], ext[2]};
    for (const auto& c : j.at("cases")) {
      ManifestEntry e{c.at("case_id").get<std::string>(), c.at("split").get<std::string>()};
      if (e.split != "train" && e.split != "val") {
        throw DataError(DataError::Kind::MalformedHeader,
                        path.string() + ": unknown split '" + e.split + "'");
      }
      m.cases.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::MalformedHeader, path.string() + ": " + e.what());
  }
  if (m.format_version != kVolumeFormatVersion) {
    throw DataError(DataError::Kind::MalformedHeader, path.string() + ": unsupported format_version");
  }
  for (const auto& c : m.cases) {
    if (!fs::exists(dir / (c.case_id + ".vol.json"))) {
      throw DataError(DataError::Kind::Missing, "manifest lists missing case " + c.case_id);
    }
  }
  return m;
}

DatasetManifest generate_dataset(const PhantomSpec& spec, const fs::path& dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError(DataError::Kind::Io, "cannot create dataset directory " + dir.string());
  }
  const std::int64_t n = spec.num_cases;
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      write_case(dir, generate_phantom(spec, Rng::derive(spec.seed, i), case_id_for(i)));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  DatasetManifest m;
  m.seed = spec.seed;
  m.extents = {spec.grid, spec.grid, spec.grid};
  const auto tags = split_cases(n, spec.train_fraction, spec.seed);
  for (std::int64_t i = 0; i < n; ++i) m.cases.push_back({case_id_for(i), tags[i]});
  write_manifest(dir, m);
  return m;
}

}  // namespace scseg
