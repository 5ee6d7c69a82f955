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

#include "segx/metrics.hpp"

#include <cstdio>
#include <fstream>

namespace segx {

ConfusionCounts confusion(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape()) {
    throw ShapeError("confusion: prediction " + pred.shape().str() + " vs truth " + truth.shape().str());
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const float p = pred[i];
    const float t = truth[i];
    if ((p != 1.0f && p != -1.0f) || (t != 1.0f && t != -1.0f)) {
      throw Error("confusion: masks must be binary (+1/-1); binarize them first");
    }
    const bool pf = p > 0.0f;
    const bool tf = t > 0.0f;
    if (pf && tf) {
      ++c.tp;
    } else if (pf) {
      ++c.fp;
    } else if (tf) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ImageMetrics metrics(const ConfusionCounts& c, std::string id) {
  ImageMetrics m;
  m.id = std::move(id);
  m.counts = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  const bool truth_empty = c.tp + c.fn == 0;
  const bool pred_empty = c.tp + c.fp == 0;
  if (truth_empty && pred_empty) {
    m.both_empty = true;
    m.jaccard = m.dice = m.recall = m.precision = 1.0;
    return m;
  }
  m.jaccard = ratio(c.tp, c.tp + c.fp + c.fn);
  m.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  return m;
}

MetricsReport aggregate(std::vector<ImageMetrics> per_image, float threshold) {
  MetricsReport r;
  r.threshold = threshold;
  r.images = std::move(per_image);
  if (r.images.empty()) return r;
  for (const auto& m : r.images) {
    r.accuracy += m.accuracy;
    r.jaccard += m.jaccard;
    r.dice += m.dice;
    r.recall += m.recall;
    r.precision += m.precision;
  }
  const double n = static_cast<double>(r.images.size());
  r.accuracy /= n;
  r.jaccard /= n;
  r.dice /= n;
  r.recall /= n;
  r.precision /= n;
  return r;
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string format_aggregate_line(const MetricsReport& r) {
  return "aggregate images=" + std::to_string(r.images.size()) + " accuracy=" + fmt6(r.accuracy) +
         " jaccard=" + fmt6(r.jaccard) + " dice=" + fmt6(r.dice) + " recall=" + fmt6(r.recall) +
         " precision=" + fmt6(r.precision);
}

std::string format_report(const MetricsReport& r) {
  std::string out;
  out += "# segxplain metrics report\n";
  out += "# aggregation = macro (unweighted mean of per-image metrics)\n";
  out += "# threshold = " + fmt6(r.threshold) + " (prediction > threshold is foreground)\n";
  out += "# empty_mask_policy = both-empty -> jaccard/dice/recall/precision 1 (flagged); one-empty -> undefined ratios 0\n";
  out += "# columns: id tp fp fn tn accuracy jaccard dice recall precision both_empty\n";
  for (const auto& m : r.images) {
    out += m.id + ' ' + std::to_string(m.counts.tp) + ' ' + std::to_string(m.counts.fp) + ' ' +
           std::to_string(m.counts.fn) + ' ' + std::to_string(m.counts.tn) + ' ' + fmt6(m.accuracy) + ' ' +
           fmt6(m.jaccard) + ' ' + fmt6(m.dice) + ' ' + fmt6(m.recall) + ' ' + fmt6(m.precision) + ' ' +
           (m.both_empty ? "1" : "0") + '\n';
  }
  out += format_aggregate_line(r) + '\n';
  return out;
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write report '" + path.string() + "'");
  f << format_report(report);
  if (!f) throw Error("failed writing report '" + path.string() + "'");
}

}  // namespace segx
