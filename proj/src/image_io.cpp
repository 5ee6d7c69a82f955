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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "segx/data.hpp"

namespace segx {

namespace {

constexpr std::array<unsigned char, 8> kPngSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct Ihdr {
  int bit_depth;
  int color_type;
};

// Reads bit depth and colour type straight from the IHDR chunk; the
// simplified libpng reader would silently widen or narrow them.
Ihdr read_ihdr(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageFormatError("cannot open image '" + path.string() + "'");
  std::array<unsigned char, 26> head{};
  f.read(reinterpret_cast<char*>(head.data()), head.size());
  if (f.gcount() < static_cast<std::streamsize>(head.size()) ||
      !std::equal(kPngSignature.begin(), kPngSignature.end(), head.begin())) {
    throw ImageFormatError("'" + path.string() + "' is not a PNG file");
  }
  if (std::memcmp(head.data() + 12, "IHDR", 4) != 0) {
    throw ImageFormatError("'" + path.string() + "' is a malformed PNG (missing IHDR)");
  }
  return {head[24], head[25]};
}

unsigned char to_byte(float v) {
  const float clamped = std::clamp(v, -1.0f, 1.0f);
  // round half away from zero; the argument is non-negative
  return static_cast<unsigned char>(std::floor((clamped + 1.0f) * 127.5f + 0.5f));
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  const Ihdr ihdr = read_ihdr(path);
  if (ihdr.bit_depth != 8) {
    throw ImageFormatError("'" + path.string() + "' has unsupported bit depth " + std::to_string(ihdr.bit_depth) +
                           " (need 8)");
  }
  std::size_t channels = 0;
  png_uint_32 format = 0;
  switch (ihdr.color_type) {
    case PNG_COLOR_TYPE_GRAY:
    case PNG_COLOR_TYPE_GRAY_ALPHA:
      channels = 1;
      format = PNG_FORMAT_GRAY;
      break;
    case PNG_COLOR_TYPE_RGB:
    case PNG_COLOR_TYPE_RGB_ALPHA:
      channels = 3;
      format = PNG_FORMAT_RGB;
      break;
    default:
      throw ImageFormatError("'" + path.string() + "' uses unsupported PNG colour type " +
                             std::to_string(ihdr.color_type));
  }

  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw ImageFormatError("cannot decode '" + path.string() + "': " + img.message);
  }
  img.format = format;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(img));
  // A null background composites any alpha channel over black; data images
  // are expected to be opaque.
  if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw ImageFormatError("cannot decode '" + path.string() + "': " + img.message);
  }
  const std::size_t h = img.height;
  const std::size_t w = img.width;
  Tensor out(Shape{1, channels, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const float p = pixels[(y * w + x) * channels + c];
        out.at(0, c, y, x) = 2.0f * p / 255.0f - 1.0f;
      }
    }
  }
  return out;
}

void save_image(const Tensor& image, const std::filesystem::path& path) {
  const Shape& s = image.shape();
  if (s.n != 1 || (s.c != 1 && s.c != 3)) {
    throw ShapeError("save_image needs a 1x1xHxW or 1x3xHxW tensor, got " + s.str());
  }
  std::vector<unsigned char> pixels(s.c * s.plane());
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t c = 0; c < s.c; ++c) pixels[(y * s.w + x) * s.c + c] = to_byte(image.at(0, c, y, x));
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(s.w);
  img.height = static_cast<png_uint_32>(s.h);
  img.format = s.c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
    throw Error("cannot write '" + path.string() + "': " + img.message);
  }
}

Tensor binarize(const Tensor& mask, float threshold) {
  Tensor out(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] > threshold ? 1.0f : -1.0f;
  return out;
}

}  // namespace segx
