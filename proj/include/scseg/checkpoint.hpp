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
#pragma once

// Checkpoint = text manifest + raw blob.
//
// The manifest at `path` is line-oriented key/value text:
//
//   format scseg-checkpoint
//   version 1
//   blob <file name of the blob, relative to the manifest>
//   count <number of tensors>
//   tensor <name> <d0,d1,...> <byte offset> <element count>
//   ...
//
// The blob at `path` + ".bin" holds every tensor's values back to back as
// little-endian IEEE-754 binary32, in manifest order.

#include <filesystem>
#include <string>
#include <vector>

#include "scseg/tensor.hpp"

namespace scseg {

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointTensor>& tensors);

/// Throws DataError (Missing, BadMagic, MalformedHeader, Truncated).
std::vector<CheckpointTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies of the current values of `params`, names prefixed with `prefix`.
std::vector<CheckpointTensor> snapshot(const ParamList<float>& params, const std::string& prefix = "");

/// Writes stored values into `params` in registry order, matching names
/// `prefix + name`. Entries with other prefixes are ignored. Throws
/// DataError(Mismatch) naming the first tensor whose name or shape differs.
void restore(const std::vector<CheckpointTensor>& tensors, ParamList<float>& params,
             const std::string& prefix = "");

}  // namespace scseg
