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

#include <png.h>

#include <cmath>
#include <cstring>

#include "segx/metrics.hpp"

namespace segx {

namespace {

unsigned char channel(double v) {
  // v in [0, 1]; round half away from zero
  return static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
}

}  // namespace

std::vector<unsigned char> heatmap_rgb(const Tensor& map) {
  const Shape& s = map.shape();
  if (!map.all_finite()) throw Error("render_heatmap: map contains non-finite values");
  std::vector<double> plane(s.plane(), 0.0);
  for (std::size_t c = 0; c < s.c; ++c) {
    const float* p = map.plane(0, c);
    for (std::size_t i = 0; i < s.plane(); ++i) plane[i] += p[i];
  }
  double peak = 0.0;
  for (double v : plane) peak = std::max(peak, std::abs(v));
  std::vector<unsigned char> rgb(3 * s.plane());
  for (std::size_t i = 0; i < s.plane(); ++i) {
    const double v = peak > 0.0 ? plane[i] / peak : 0.0;
    const double fade = 1.0 - std::abs(v);
    unsigned char* px = rgb.data() + 3 * i;
    if (v >= 0.0) {
      px[0] = 255;
      px[1] = px[2] = channel(fade);
    } else {
      px[0] = px[1] = channel(fade);
      px[2] = 255;
    }
  }
  return rgb;
}

void render_heatmap(const Tensor& map, const std::filesystem::path& path) {
  const Shape& s = map.shape();
  const std::vector<unsigned char> rgb = heatmap_rgb(map);
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(s.w);
  img.height = static_cast<png_uint_32>(s.h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, rgb.data(), 0, nullptr)) {
    throw Error("cannot write heatmap '" + path.string() + "': " + img.message);
  }
}

}  // namespace segx
