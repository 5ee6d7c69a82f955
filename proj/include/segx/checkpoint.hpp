// Copyright 2026 The segxplain Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary container shared by network checkpoints and raw relevance dumps:
//
//   "SEGXPLN1"            8 bytes magic
//   version               u32 little-endian
//   header_length         u32 little-endian
//   header                UTF-8 JSON, header_length bytes
//   float blocks          f32 little-endian, in the order the header lists
//
// A network checkpoint's header carries the role, profile and full layer
// list; per layer the weight block precedes the bias block.

#ifndef SEGX_CHECKPOINT_HPP_
#define SEGX_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "segx/network.hpp"

namespace segx {

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'G', 'X', 'P', 'L', 'N', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Wrong magic bytes.
class NotACheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// File shorter or longer than its header declares, or unparsable header.
class IntegrityError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// Header parses but describes tensors inconsistent with the architecture.
class InconsistentShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct FloatBlockFile {
  std::string header;         // JSON text
  std::vector<float> values;  // all blocks, concatenated
};

/// Writes atomically (temporary file + rename).
void write_float_blocks(const std::filesystem::path& path, const std::string& header,
                        const std::vector<std::span<const float>>& blocks);

/// Reads the header and every float after it. Callers compare the value
/// count against what the header declares (see expect_float_count).
FloatBlockFile read_float_blocks(const std::filesystem::path& path);

/// Throws IntegrityError unless `file` holds exactly `expected` floats.
void expect_float_count(const FloatBlockFile& file, std::size_t expected, const std::filesystem::path& path);

std::string spec_to_header(const NetworkSpec& spec);
NetworkSpec spec_from_header(const std::string& header);

void save_checkpoint(const NetworkSpec& spec, const ParamStore& params, const std::filesystem::path& path);

struct Checkpoint {
  NetworkSpec spec;
  ParamStore params;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace segx

#endif  // SEGX_CHECKPOINT_HPP_
