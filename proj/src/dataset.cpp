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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "segx/data.hpp"
#include "segx/rng.hpp"

namespace segx {

std::string to_string(SyntheticKind k) { return k == SyntheticKind::polyp ? "polyp" : "instrument"; }

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "polyp") return SyntheticKind::polyp;
  if (name == "instrument") return SyntheticKind::instrument;
  throw Error("unknown dataset kind '" + name + "' (expected polyp or instrument)");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  m.root = path.parent_path();
  m.split = path.filename().string().find("test") != std::string::npos ? Split::test : Split::train;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3 || fields[0].empty()) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>image<TAB>mask");
    }
    if (!seen.insert(fields[0]).second) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" + fields[0] + "'");
    }
    ManifestEntry e{fields[0], fields[1], fields[2]};
    for (const auto& rel : {e.image, e.mask}) {
      if (!std::filesystem::exists(m.root / rel)) {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": missing file '" + (m.root / rel).string() + "'");
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write manifest '" + path.string() + "'");
  for (const auto& e : manifest.entries) {
    f << e.id << '\t' << e.image.generic_string() << '\t' << e.mask.generic_string() << '\n';
  }
  if (!f) throw Error("failed writing manifest '" + path.string() + "'");
}

std::vector<SamplePair> load_dataset(const DatasetManifest& manifest) {
  std::vector<SamplePair> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Tensor image = load_image(manifest.root / e.image);
    Tensor mask = load_image(manifest.root / e.mask);
    if (image.shape().c != 3) {
      throw Error("image for '" + e.id + "' must be RGB, got " + std::to_string(image.shape().c) + " channel(s)");
    }
    if (mask.shape().c != 1) {
      throw Error("mask for '" + e.id + "' must be grayscale, got " + std::to_string(mask.shape().c) + " channels");
    }
    if (mask.shape().h != image.shape().h || mask.shape().w != image.shape().w) {
      throw Error("mask for '" + e.id + "' is " + mask.shape().str() + " but the image is " + image.shape().str());
    }
    out.push_back({std::move(image), binarize(mask), e.id});
  }
  return out;
}

namespace {

struct Rgb {
  double r, g, b;
};

constexpr double kEmptyFraction = 0.15;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Reddish mucosa with low-frequency folds, vignetting and pixel noise.
std::vector<Rgb> draw_background(Rng& rng, std::size_t size) {
  const Rgb base{0.72 + rng.uniform(-0.08, 0.08), 0.36 + rng.uniform(-0.06, 0.06), 0.30 + rng.uniform(-0.05, 0.05)};
  const double f1 = rng.uniform(1.0, 3.0), f2 = rng.uniform(1.0, 3.0);
  const double p1 = rng.uniform(0.0, 2.0 * std::numbers::pi), p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amp = rng.uniform(0.03, 0.07);
  std::vector<Rgb> px(size * size);
  const double s = static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (x + 0.5) / s, v = (y + 0.5) / s;
      const double fold = amp * (std::sin(2.0 * std::numbers::pi * f1 * u + p1) +
                                 std::sin(2.0 * std::numbers::pi * f2 * v + p2)) / 2.0;
      const double r2 = (u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5);
      const double shade = 1.0 - 0.6 * r2 + fold;
      const double n = rng.normal(0.0, 0.04);
      px[y * size + x] = {base.r * shade + n, base.g * shade + 0.7 * n, base.b * shade + 0.7 * n};
    }
  }
  return px;
}

// Low-contrast, soft-edged elliptical blobs.
bool draw_polyps(Rng& rng, std::size_t size, std::vector<Rgb>& px, std::vector<bool>& mask) {
  if (rng.uniform() < kEmptyFraction) return false;
  const int blobs = rng.uniform() < 0.7 ? 1 : 2;
  const double s = static_cast<double>(size);
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0.25, 0.75) * s, cy = rng.uniform(0.25, 0.75) * s;
    const double ax = rng.uniform(0.12, 0.26) * s, ay = rng.uniform(0.12, 0.26) * s;
    const double th = rng.uniform(0.0, std::numbers::pi);
    const Rgb tint{rng.uniform(0.04, 0.08), rng.uniform(0.0, 0.04), rng.uniform(-0.02, 0.02)};
    const double ct = std::cos(th), st = std::sin(th);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double u = (dx * ct + dy * st) / ax, v = (-dx * st + dy * ct) / ay;
        const double r = std::sqrt(u * u + v * v);
        if (r >= 1.0) continue;
        const double w = 1.0 - smoothstep(0.55, 1.0, r);
        Rgb& p = px[y * size + x];
        p = {p.r + w * tint.r, p.g + w * tint.g, p.b + w * tint.b};
        mask[y * size + x] = true;
      }
    }
  }
  return true;
}

// One high-contrast, sharp-edged metallic rod entering from the border,
// optionally widening into a wedge at the tip.
bool draw_instrument(Rng& rng, std::size_t size, std::vector<Rgb>& px, std::vector<bool>& mask) {
  if (rng.uniform() < kEmptyFraction) return false;
  const double s = static_cast<double>(size);
  const double t = rng.uniform(0.0, 4.0);
  const int edge = static_cast<int>(t);
  const double along = (t - edge) * s;
  double x0 = 0, y0 = 0;
  switch (edge) {
    case 0: x0 = along; y0 = -2.0; break;
    case 1: x0 = s + 2.0; y0 = along; break;
    case 2: x0 = along; y0 = s + 2.0; break;
    default: x0 = -2.0; y0 = along; break;
  }
  const double x1 = rng.uniform(0.3, 0.7) * s, y1 = rng.uniform(0.3, 0.7) * s;
  const double half = rng.uniform(1.4, 2.6) * s / 32.0;
  const double tip = rng.uniform() < 0.4 ? rng.uniform(1.0, 1.8) : 1.0;
  const double metal = rng.uniform(0.72, 0.88);
  const double ux = x1 - x0, uy = y1 - y0;
  const double len2 = ux * ux + uy * uy;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px_ = x + 0.5 - x0, py_ = y + 0.5 - y0;
      const double a = std::clamp((px_ * ux + py_ * uy) / len2, 0.0, 1.0);
      const double dx = px_ - a * ux, dy = py_ - a * uy;
      const double radius = half * (1.0 + (tip - 1.0) * a);
      if (dx * dx + dy * dy > radius * radius) continue;
      const double sheen = 0.08 * std::cos(3.0 * std::sqrt(dx * dx + dy * dy) / radius);
      const double n = rng.normal(0.0, 0.02);
      px[y * size + x] = {metal + sheen + n, metal + sheen + n, metal + 0.03 + sheen + n};
      mask[y * size + x] = true;
    }
  }
  return true;
}

}  // namespace

std::vector<SyntheticSample> synthesize(SyntheticKind kind, std::size_t count, std::size_t size, std::uint64_t seed) {
  if (count < 1) throw Error("sample count must be >= 1");
  if (size < 8) throw Error("image size must be >= 8");
  Rng rng(seed);
  std::vector<SyntheticSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<Rgb> px = draw_background(rng, size);
    std::vector<bool> fg(size * size, false);
    const bool has = kind == SyntheticKind::polyp ? draw_polyps(rng, size, px, fg) : draw_instrument(rng, size, px, fg);
    SyntheticSample s;
    s.has_object = has && std::find(fg.begin(), fg.end(), true) != fg.end();
    s.pair.image = Tensor(Shape{1, 3, size, size});
    s.pair.mask = Tensor(Shape{1, 1, size, size}, -1.0f);
    for (std::size_t p = 0; p < size * size; ++p) {
      const Rgb& c = px[p];
      s.pair.image.raw()[0 * size * size + p] = static_cast<float>(2.0 * std::clamp(c.r, 0.0, 1.0) - 1.0);
      s.pair.image.raw()[1 * size * size + p] = static_cast<float>(2.0 * std::clamp(c.g, 0.0, 1.0) - 1.0);
      s.pair.image.raw()[2 * size * size + p] = static_cast<float>(2.0 * std::clamp(c.b, 0.0, 1.0) - 1.0);
      if (fg[p]) s.pair.mask.raw()[p] = 1.0f;
    }
    char id[32];
    std::snprintf(id, sizeof(id), "%s_%04zu", to_string(kind).c_str(), i);
    s.pair.id = id;
    out.push_back(std::move(s));
  }
  return out;
}

SyntheticManifests gen_synthetic(SyntheticKind kind, std::size_t count, std::size_t size, std::uint64_t seed,
                                 const std::filesystem::path& out_dir) {
  const std::vector<SyntheticSample> samples = synthesize(kind, count, size, seed);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error("cannot create output directory '" + out_dir.string() + "'");
  }
  const std::size_t test_count = count / 5;
  DatasetManifest train{out_dir, {}, Split::train};
  DatasetManifest test{out_dir, {}, Split::test};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SamplePair& p = samples[i].pair;
    ManifestEntry e{p.id, p.id + "_image.png", p.id + "_mask.png"};
    save_image(p.image, out_dir / e.image);
    save_image(p.mask, out_dir / e.mask);
    (i < count - test_count ? train : test).entries.push_back(std::move(e));
  }
  SyntheticManifests out;
  out.train = out_dir / "manifest_train.tsv";
  out.test = out_dir / "manifest_test.tsv";
  out.train_count = train.entries.size();
  out.test_count = test.entries.size();
  write_manifest(train, out.train);
  write_manifest(test, out.test);
  return out;
}

}  // namespace segx
