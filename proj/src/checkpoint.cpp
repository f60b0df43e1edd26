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
#include "scseg/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "scseg/errors.hpp"

namespace scseg {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host order, which must be little-endian");

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "scseg-checkpoint";
constexpr int kVersion = 1;

std::string shape_text(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.rank(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

Shape parse_shape(const std::string& text, const std::string& where) {
  std::vector<std::int64_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      dims.push_back(v);
    } catch (const std::exception&) {
      throw DataError(DataError::Kind::MalformedHeader, where + ": bad shape '" + text + "'");
    }
  }
  if (dims.empty()) throw DataError(DataError::Kind::MalformedHeader, where + ": empty shape");
  return Shape(std::move(dims));
}

}  // namespace

void save_checkpoint(const fs::path& path, const std::vector<CheckpointTensor>& tensors) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path blob = fs::path(path.string() + ".bin");
  std::ofstream man(path, std::ios::trunc);
  std::ofstream bin(blob, std::ios::binary | std::ios::trunc);
  if (!man || !bin) throw DataError(DataError::Kind::Io, "cannot write checkpoint " + path.string());
  man << "format " << kMagic << "\nversion " << kVersion << "\nblob "
      << blob.filename().string() << "\ncount " << tensors.size() << '\n';
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    if (t.shape.numel() != static_cast<std::int64_t>(t.values.size())) {
      throw ShapeError("save_checkpoint: tensor " + t.name + " has inconsistent size");
    }
    man << "tensor " << t.name << ' ' << shape_text(t.shape) << ' ' << offset << ' '
        << t.values.size() << '\n';
    bin.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    offset += t.values.size() * sizeof(float);
  }
  man.flush();
  bin.flush();
  if (!man || !bin) throw DataError(DataError::Kind::Io, "short write to " + path.string());
}

std::vector<CheckpointTensor> load_checkpoint(const fs::path& path) {
  std::ifstream man(path);
  if (!man) throw DataError(DataError::Kind::Missing, "checkpoint not found: " + path.string());
  const std::string where = path.string();
  auto bad = [&](const std::string& msg) {
    return DataError(DataError::Kind::MalformedHeader, where + ": " + msg);
  };

  std::string line, key, value;
  if (!std::getline(man, line)) throw bad("empty manifest");
  {
    std::istringstream ls(line);
    ls >> key >> value;
    if (key != "format" || value != kMagic) {
      throw DataError(DataError::Kind::BadMagic, where + ": not a checkpoint manifest");
    }
  }
  int version = 0;
  std::string blob_name;
  std::size_t count = 0;
  bool have_count = false;
  std::vector<CheckpointTensor> out;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls >> key;
    if (key == "version") {
      if (!(ls >> version) || version != kVersion) throw bad("unsupported version");
    } else if (key == "blob") {
      if (!(ls >> blob_name)) throw bad("missing blob name");
    } else if (key == "count") {
      if (!(ls >> count)) throw bad("bad count");
      have_count = true;
    } else if (key == "tensor") {
      std::string name, shape;
      std::uint64_t offset = 0, n = 0;
      if (!(ls >> name >> shape >> offset >> n)) throw bad("bad tensor line '" + line + "'");
      CheckpointTensor t{name, parse_shape(shape, where), {}};
      if (static_cast<std::uint64_t>(t.shape.numel()) != n) {
        throw bad("element count of " + name + " disagrees with its shape");
      }
      out.push_back(std::move(t));
      spans.emplace_back(offset, n);
    } else {
      throw bad("unknown key '" + key + "'");
    }
  }
  if (version == 0 || blob_name.empty() || !have_count) throw bad("incomplete header");
  if (count != out.size()) throw bad("count does not match number of tensor lines");

  const fs::path blob = path.parent_path() / blob_name;
  std::ifstream bin(blob, std::ios::binary);
  if (!bin) throw DataError(DataError::Kind::Missing, "checkpoint blob not found: " + blob.string());
  bin.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(bin.tellg());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [offset, n] = spans[i];
    if (offset + n * sizeof(float) > size) {
      throw DataError(DataError::Kind::Truncated,
                      blob.string() + ": blob ends before tensor " + out[i].name);
    }
    out[i].values.resize(n);
    bin.seekg(static_cast<std::streamoff>(offset));
    bin.read(reinterpret_cast<char*>(out[i].values.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
    if (!bin) throw DataError(DataError::Kind::Io, "read failed in " + blob.string());
  }
  return out;
}

std::vector<CheckpointTensor> snapshot(const ParamList<float>& params, const std::string& prefix) {
  std::vector<CheckpointTensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto v = p.tensor.values();
    out.push_back({prefix + p.name, p.tensor.shape(), std::vector<float>(v.begin(), v.end())});
  }
  return out;
}

void restore(const std::vector<CheckpointTensor>& tensors, ParamList<float>& params,
             const std::string& prefix) {
  std::vector<const CheckpointTensor*> selected;
  for (const auto& t : tensors) {
    const bool has_prefix = t.name.compare(0, prefix.size(), prefix) == 0;
    // Without a prefix, skip entries that belong to other sections (e.g. velocities).
    if (prefix.empty() ? t.name.find('/') == std::string::npos : has_prefix) {
      selected.push_back(&t);
    }
  }
  const std::size_t n = std::min(selected.size(), params.size());
  for (std::size_t i = 0; i < n; ++i) {
    const CheckpointTensor& t = *selected[i];
    NamedParam<float>& p = params[i];
    const std::string want = prefix + p.name;
    if (t.name != want || !(t.shape == p.tensor.shape())) {
      throw DataError(DataError::Kind::Mismatch,
                      "checkpoint mismatch at tensor " + want + ": network expects " +
                          p.tensor.shape().str() + ", checkpoint has " + t.name + " " +
                          t.shape.str());
    }
  }
  if (selected.size() != params.size()) {
    const std::string first = selected.size() < params.size()
                                  ? prefix + params[n].name + " (missing from checkpoint)"
                                  : selected[n]->name + " (not in network)";
    throw DataError(DataError::Kind::Mismatch, "checkpoint mismatch at tensor " + first);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = params[i].tensor.mutable_values();
    std::copy(selected[i]->values.begin(), selected[i]->values.end(), dst.begin());
  }
}

}  // namespace scseg
