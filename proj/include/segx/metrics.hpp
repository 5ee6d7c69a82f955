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

#ifndef SEGX_METRICS_HPP_
#define SEGX_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "segx/tensor.hpp"

namespace segx {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Per-pixel counts with +1 as foreground. Both masks must be two-valued
/// (+1 / -1) and of equal shape.
ConfusionCounts confusion(const Tensor& pred, const Tensor& truth);

struct ImageMetrics {
  std::string id;
  ConfusionCounts counts;
  double accuracy = 0;
  double jaccard = 0;
  double dice = 0;
  double recall = 0;
  double precision = 0;
  /// Prediction and truth both empty: overlap ratios are defined as 1.
  bool both_empty = false;
};

/// Ratios with the empty-mask policy: both empty -> 1 (flagged); exactly one
/// empty -> the undefined ratios are 0.
ImageMetrics metrics(const ConfusionCounts& counts, std::string id = {});

struct MetricsReport {
  std::vector<ImageMetrics> images;
  double accuracy = 0;
  double jaccard = 0;
  double dice = 0;
  double recall = 0;
  double precision = 0;
  float threshold = 0.0f;
};

/// Unweighted mean over images (macro average).
MetricsReport aggregate(std::vector<ImageMetrics> per_image, float threshold = 0.0f);

/// Header lines, one line per image, then the aggregate line.
std::string format_report(const MetricsReport& report);
std::string format_aggregate_line(const MetricsReport& report);
void write_report(const MetricsReport& report, const std::filesystem::path& path);

/// Sums channels, scales by 1/max|v| and maps blue (-1) -> white (0) ->
/// red (+1). Returns interleaved RGB bytes, row-major.
std::vector<unsigned char> heatmap_rgb(const Tensor& map);

/// Renders the first batch item of `map` as an 8-bit RGB PNG.
void render_heatmap(const Tensor& map, const std::filesystem::path& path);

}  // namespace segx

#endif  // SEGX_METRICS_HPP_
