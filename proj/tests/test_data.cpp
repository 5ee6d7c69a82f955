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

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "doctest.h"
#include "segx/data.hpp"
#include "segx/metrics.hpp"
#include "support.hpp"

using namespace segx;
using segx::test::Draw;
using segx::test::TempDir;

namespace {

std::uint32_t crc32(const std::string& bytes) {
  std::uint32_t c = 0xffffffffu;
  for (unsigned char b : bytes) {
    c ^= b;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xedb88320u & (0u - (c & 1u)));
  }
  return c ^ 0xffffffffu;
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

void chunk(std::string& png, const std::string& type, const std::string& data) {
  put_be32(png, static_cast<std::uint32_t>(data.size()));
  const std::string body = type + data;
  png += body;
  put_be32(png, crc32(body));
}

// Minimal 8-bit PNG built by hand: filter 0 rows inside one stored
// (uncompressed) deflate block. Independent of the library under test.
void write_stored_png(const std::filesystem::path& path, std::uint32_t w, std::uint32_t h, int channels,
                      const std::vector<unsigned char>& pixels) {
  std::string raw;
  for (std::uint32_t y = 0; y < h; ++y) {
    raw.push_back(0);
    raw.append(reinterpret_cast<const char*>(pixels.data()) + y * w * channels, w * channels);
  }
  std::string z = "\x78\x01";
  z.push_back(1);
  const auto len = static_cast<std::uint16_t>(raw.size());
  z.push_back(static_cast<char>(len & 0xff));
  z.push_back(static_cast<char>(len >> 8));
  z.push_back(static_cast<char>(~len & 0xff));
  z.push_back(static_cast<char>((~len >> 8) & 0xff));
  z += raw;
  std::uint32_t a = 1, b = 0;
  for (unsigned char c : raw) {
    a = (a + c) % 65521;
    b = (b + a) % 65521;
  }
  put_be32(z, (b << 16) | a);

  std::string png = "\x89PNG\r\n\x1a\n";
  std::string ihdr;
  put_be32(ihdr, w);
  put_be32(ihdr, h);
  ihdr += std::string{8, static_cast<char>(channels == 1 ? 0 : 2), 0, 0, 0};
  chunk(png, "IHDR", ihdr);
  chunk(png, "IDAT", z);
  chunk(png, "IEND", "");
  std::ofstream(path, std::ios::binary) << png;
}

Tensor grid_tensor(Draw& d, Shape s) {
  Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2.0f * static_cast<float>(d.index(0, 255)) / 255.0f - 1.0f;
  return t;
}

Tensor mask_from(const std::vector<int>& bits, std::size_t h, std::size_t w) {
  Tensor m({1, 1, h, w});
  for (std::size_t i = 0; i < bits.size(); ++i) m[i] = bits[i] ? 1.0f : -1.0f;
  return m;
}

double gap(const SamplePair& p) {
  double fg = 0, bg = 0;
  std::size_t nf = 0, nb = 0;
  for (std::size_t i = 0; i < p.mask.size(); ++i) {
    double v = 0;
    for (std::size_t c = 0; c < 3; ++c) v += p.image.plane(0, c)[i];
    if (p.mask[i] > 0) {
      fg += v;
      ++nf;
    } else {
      bg += v;
      ++nb;
    }
  }
  return std::abs(fg / static_cast<double>(nf) - bg / static_cast<double>(nb)) / 3.0;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("decoding a hand-built PNG applies the affine pixel map") {
  TempDir dir("png");
  write_stored_png(dir / "g.png", 3, 1, 1, {0, 128, 255});
  const Tensor g = load_image(dir / "g.png");
  CHECK(g.shape() == Shape{1, 1, 1, 3});
  CHECK(g[0] == -1.0f);
  CHECK(g[1] == doctest::Approx(1.0 / 255.0));
  CHECK(g[2] == 1.0f);
  write_stored_png(dir / "c.png", 2, 2, 3, {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30});
  const Tensor c = load_image(dir / "c.png");
  CHECK(c.shape() == Shape{1, 3, 2, 2});
  CHECK(c.at(0, 0, 0, 0) == 1.0f);
  CHECK(c.at(0, 1, 0, 0) == -1.0f);
  CHECK(c.at(0, 1, 0, 1) == 1.0f);
  CHECK(c.at(0, 2, 1, 0) == 1.0f);
  CHECK(c.at(0, 2, 1, 1) == doctest::Approx(2.0 * 30 / 255.0 - 1.0));
}

TEST_CASE("image round trip is exact on the 8-bit grid") {
  TempDir dir("roundtrip");
  Draw d(3);
  for (const std::size_t c : {1u, 3u}) {
    const Tensor t = grid_tensor(d, {1, c, 9, 13});
    save_image(t, dir / "x.png");
    CHECK(load_image(dir / "x.png") == t);
  }
  Tensor out_of_range({1, 1, 1, 2}, {-3.0f, 7.0f});
  save_image(out_of_range, dir / "clamp.png");
  const Tensor clamped = load_image(dir / "clamp.png");
  CHECK(clamped[0] == -1.0f);
  CHECK(clamped[1] == 1.0f);
  CHECK_THROWS_AS(save_image(Tensor({1, 2, 4, 4}), dir / "bad.png"), ShapeError);
  CHECK_THROWS_AS(save_image(Tensor({2, 1, 4, 4}), dir / "bad.png"), ShapeError);
}

TEST_CASE("non-PNG input is a format error") {
  TempDir dir("notpng");
  std::ofstream(dir / "x.png") << "GIF89a not really";
  CHECK_THROWS_AS(load_image(dir / "x.png"), ImageFormatError);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), ImageFormatError);
}

TEST_CASE("binarize") {
  const Tensor t({1, 1, 1, 4}, {-0.5f, 0.0f, 0.1f, -1.0f});
  const Tensor b = binarize(t);
  CHECK(std::vector<float>(b.data().begin(), b.data().end()) == std::vector<float>{-1, -1, 1, -1});
  CHECK(binarize(b) == b);
  CHECK(binarize(t, -0.6f).sum() == 2.0f);
}

TEST_CASE("synthetic corpus contract") {
  for (const SyntheticKind kind : {SyntheticKind::polyp, SyntheticKind::instrument}) {
    const auto samples = synthesize(kind, 100, 32, 7);
    std::size_t empty = 0;
    for (const auto& s : samples) {
      CHECK(s.pair.image.shape() == Shape{1, 3, 32, 32});
      CHECK(s.pair.mask.shape() == Shape{1, 1, 32, 32});
      bool any = false;
      for (float v : s.pair.mask.data()) {
        CHECK((v == 1.0f || v == -1.0f));
        any = any || v > 0;
      }
      CHECK(any == s.has_object);
      for (float v : s.pair.image.data()) CHECK((v >= -1.0f && v <= 1.0f));
      if (!s.has_object) ++empty;
    }
    CHECK(empty >= 5);
    CHECK(empty <= 30);
    const auto again = synthesize(kind, 100, 32, 7);
    for (std::size_t i = 0; i < samples.size(); ++i) CHECK(again[i].pair.image == samples[i].pair.image);
    CHECK_FALSE(synthesize(kind, 1, 32, 8)[0].pair.image == samples[0].pair.image);
  }
  CHECK(parse_synthetic_kind(to_string(SyntheticKind::polyp)) == SyntheticKind::polyp);
  CHECK_THROWS(parse_synthetic_kind("tumor"));
  CHECK_THROWS(synthesize(SyntheticKind::polyp, 0, 32, 1));
}

TEST_CASE("instruments contrast more with the background than polyps") {
  double inst = 0, poly = 0;
  std::size_t ni = 0, np = 0;
  for (const auto& s : synthesize(SyntheticKind::instrument, 100, 32, 11))
    if (s.has_object) {
      inst += gap(s.pair);
      ++ni;
    }
  for (const auto& s : synthesize(SyntheticKind::polyp, 100, 32, 11))
    if (s.has_object) {
      poly += gap(s.pair);
      ++np;
    }
  CHECK(inst / static_cast<double>(ni) > poly / static_cast<double>(np));
}

TEST_CASE("gen_synthetic writes a byte-reproducible split corpus") {
  TempDir a("gen_a"), b("gen_b");
  const SyntheticManifests ma = gen_synthetic(SyntheticKind::instrument, 20, 32, 3, a.path());
  gen_synthetic(SyntheticKind::instrument, 20, 32, 3, b.path());
  CHECK(ma.train_count == 16);
  CHECK(ma.test_count == 4);
  const DatasetManifest train = read_manifest(ma.train);
  const DatasetManifest test = read_manifest(ma.test);
  CHECK(train.split == Split::train);
  CHECK(test.split == Split::test);
  CHECK(train.entries.size() == 16);
  for (const auto& e : test.entries) {
    CHECK(test::file_bytes(a.path() / e.image) == test::file_bytes(b.path() / e.image));
    CHECK(test::file_bytes(a.path() / e.mask) == test::file_bytes(b.path() / e.mask));
  }
  CHECK(test::file_bytes(ma.train) == test::file_bytes(b / "manifest_train.tsv"));
  const auto pairs = load_dataset(test);
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].id == test.entries[0].id);
}

TEST_CASE("manifest parsing errors") {
  TempDir dir("manifest");
  save_image(Tensor({1, 3, 4, 4}), dir / "a.png");
  save_image(Tensor({1, 1, 4, 4}), dir / "m.png");
  std::ofstream(dir / "dup.tsv") << "x\ta.png\tm.png\nx\ta.png\tm.png\n";
  CHECK_THROWS(read_manifest(dir / "dup.tsv"));
  std::ofstream(dir / "short.tsv") << "x\ta.png\n";
  CHECK_THROWS(read_manifest(dir / "short.tsv"));
  std::ofstream(dir / "missing.tsv") << "x\ta.png\tnope.png\n";
  CHECK_THROWS(read_manifest(dir / "missing.tsv"));
  std::ofstream(dir / "swapped.tsv") << "x\tm.png\ta.png\n";
  CHECK_THROWS(load_dataset(read_manifest(dir / "swapped.tsv")));
  CHECK_THROWS(read_manifest(dir / "absent.tsv"));
  DatasetManifest m{dir.path(), {{"y", "a.png", "m.png"}}, Split::train};
  write_manifest(m, dir / "w.tsv");
  CHECK(read_manifest(dir / "w.tsv").entries.at(0).mask == "m.png");
}

}  // TEST_SUITE

TEST_SUITE("metrics") {

TEST_CASE("confusion hand cases") {
  const Tensor all = mask_from({1, 1, 1, 1}, 2, 2);
  CHECK(confusion(all, all) == ConfusionCounts{4, 0, 0, 0});
  const Tensor truth = mask_from({1, 1, 0, 0}, 2, 2);
  const Tensor pred = mask_from({0, 1, 0, 1}, 2, 2);
  const ConfusionCounts c = confusion(pred, truth);
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  const ImageMetrics m = metrics(c);
  CHECK(m.accuracy == 0.5);
  CHECK(m.jaccard == doctest::Approx(1.0 / 3.0));
  CHECK(m.dice == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.precision == 0.5);
  CHECK_FALSE(m.both_empty);
  CHECK_THROWS_AS(confusion(pred, Tensor({1, 1, 2, 3}, -1.0f)), ShapeError);
  CHECK_THROWS(confusion(Tensor({1, 1, 2, 2}, 0.3f), truth));
}

TEST_CASE("empty-mask policy") {
  const ImageMetrics both = metrics(ConfusionCounts{0, 0, 0, 9}, "e");
  CHECK(both.both_empty);
  CHECK(both.jaccard == 1.0);
  CHECK(both.dice == 1.0);
  CHECK(both.accuracy == 1.0);
  const ImageMetrics missed = metrics(ConfusionCounts{0, 0, 3, 6});
  CHECK_FALSE(missed.both_empty);
  CHECK(missed.dice == 0.0);
  CHECK(missed.precision == 0.0);
  const ImageMetrics perfect = metrics(ConfusionCounts{5, 0, 0, 4});
  CHECK(perfect.dice == 1.0);
  CHECK(perfect.jaccard == 1.0);
  CHECK(perfect.recall == 1.0);
}

TEST_CASE("metric identities and bounds on random masks") {
  Draw d(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t h = d.index(1, 6), w = d.index(1, 6);
    const double p_fg = d.real(0.0, 1.0);
    Tensor a({1, 1, h, w}), b({1, 1, h, w});
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = d.real(0, 1) < p_fg ? 1.0f : -1.0f;
      b[i] = d.real(0, 1) < p_fg ? 1.0f : -1.0f;
    }
    const ConfusionCounts c = confusion(a, b);
    CHECK(c.total() == h * w);
    const ImageMetrics m = metrics(c);
    for (double v : {m.accuracy, m.jaccard, m.dice, m.recall, m.precision}) CHECK((v >= 0.0 && v <= 1.0));
    if (!m.both_empty) CHECK(std::abs(m.dice - 2 * m.jaccard / (1 + m.jaccard)) <= 1e-9);
    if (c.fn > 0) {
      const ImageMetrics up = metrics(ConfusionCounts{c.tp + 1, c.fp, c.fn - 1, c.tn});
      CHECK(up.recall >= m.recall);
      CHECK(up.dice >= m.dice);
      CHECK(up.jaccard >= m.jaccard);
    }
  }
}

TEST_CASE("macro aggregation and report format") {
  ImageMetrics a = metrics(ConfusionCounts{2, 1, 1, 4}, "a");
  const MetricsReport single = aggregate({a});
  CHECK(single.dice == a.dice);
  CHECK(single.jaccard == a.jaccard);
  ImageMetrics x, y;
  x.dice = 0.4;
  y.dice = 0.6;
  CHECK(aggregate({x, y}).dice == doctest::Approx(0.5));
  const MetricsReport r = aggregate({a, metrics(ConfusionCounts{0, 0, 0, 8}, "b")}, 0.25f);
  const std::string text = format_report(r);
  CHECK(text.find("macro") != std::string::npos);
  CHECK(text.find("threshold") != std::string::npos);
  CHECK(text.find("empty") != std::string::npos);
  CHECK(text.find("\na ") != std::string::npos);
  CHECK(text.find(format_aggregate_line(r)) != std::string::npos);
  CHECK(format_aggregate_line(r).rfind("aggregate", 0) == 0);
  TempDir dir("report");
  write_report(r, dir / "report.txt");
  CHECK(test::file_bytes(dir / "report.txt").size() == text.size());
}

TEST_CASE("heatmap colours") {
  const auto zero = heatmap_rgb(Tensor({1, 1, 2, 2}));
  for (unsigned char v : zero) CHECK(v == 255);
  const auto rgb = heatmap_rgb(Tensor({1, 1, 1, 3}, {2.0f, -4.0f, 0.0f}));
  CHECK(std::vector<unsigned char>(rgb.begin(), rgb.begin() + 3) == std::vector<unsigned char>{255, 128, 128});
  CHECK(std::vector<unsigned char>(rgb.begin() + 3, rgb.begin() + 6) == std::vector<unsigned char>{0, 0, 255});
  CHECK(std::vector<unsigned char>(rgb.begin() + 6, rgb.end()) == std::vector<unsigned char>{255, 255, 255});
  const auto summed = heatmap_rgb(Tensor({1, 2, 1, 1}, {1.0f, -3.0f}));
  CHECK(summed[2] == 255);
  CHECK(summed[0] == 0);
  TempDir dir("heat");
  render_heatmap(Tensor({1, 3, 5, 7}, 0.5f), dir / "h.png");
  const Tensor back = load_image(dir / "h.png");
  CHECK(back.shape() == Shape{1, 3, 5, 7});
  CHECK(back.at(0, 0, 0, 0) == 1.0f);
  CHECK(back.at(0, 1, 0, 0) == -1.0f);
}

}  // TEST_SUITE
