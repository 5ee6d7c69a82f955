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

#ifndef SEGX_DATA_HPP_
#define SEGX_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "segx/tensor.hpp"

namespace segx {

class ImageFormatError : public Error {
 public:
  using Error::Error;
};

/// One training/evaluation example. image: 1x3xHxW in [-1, 1];
/// mask: 1x1xHxW with values in {-1, +1}.
struct SamplePair {
  Tensor image;
  Tensor mask;
  std::string id;
};

enum class Split { train, test };

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;  // relative to the manifest directory
  std::filesystem::path mask;
};

/// Text manifest: one `id<TAB>image_path<TAB>mask_path` record per line.
struct DatasetManifest {
  std::filesystem::path root;  // directory holding the manifest
  std::vector<ManifestEntry> entries;
  Split split = Split::train;
};

/// Reads a manifest file. The split tag is taken from the file name
/// (contains "test" -> test). Throws on malformed lines, duplicate ids, or
/// referenced files that do not exist.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads every pair listed in a manifest. Masks are binarized at 0.
std::vector<SamplePair> load_dataset(const DatasetManifest& manifest);

/// 8-bit grayscale or RGB PNG -> 1xCxHxW tensor with p -> 2p/255 - 1.
Tensor load_image(const std::filesystem::path& path);

/// Inverse of load_image; 1 or 3 channel tensors, values clamped to [-1, 1]
/// and rounded half away from zero onto the 8-bit grid. Writes grayscale for
/// one channel and RGB for three.
void save_image(const Tensor& image, const std::filesystem::path& path);

/// value > threshold -> +1, else -1.
Tensor binarize(const Tensor& mask, float threshold = 0.0f);

enum class SyntheticKind { polyp, instrument };

std::string to_string(SyntheticKind k);
SyntheticKind parse_synthetic_kind(const std::string& name);

struct SyntheticManifests {
  std::filesystem::path train;
  std::filesystem::path test;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

/// Deterministic synthetic endoscopy-like corpus. The last count/5 samples
/// form the test split. Files are `<id>_image.png` / `<id>_mask.png` with
/// manifests `manifest_train.tsv` and `manifest_test.tsv` in `out_dir`.
SyntheticManifests gen_synthetic(SyntheticKind kind, std::size_t count, std::size_t size, std::uint64_t seed,
                                 const std::filesystem::path& out_dir);

/// In-memory version of one synthetic sample (used by gen_synthetic).
/// `has_object` reports whether any foreground was drawn.
struct SyntheticSample {
  SamplePair pair;
  bool has_object = false;
};

std::vector<SyntheticSample> synthesize(SyntheticKind kind, std::size_t count, std::size_t size, std::uint64_t seed);

}  // namespace segx

#endif  // SEGX_DATA_HPP_
