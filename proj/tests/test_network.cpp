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
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "segx/checkpoint.hpp"
#include "segx/network.hpp"
#include "support.hpp"

using namespace segx;
using segx::test::Draw;
using segx::test::TempDir;

namespace {

// Forward pass rebuilt from the spec with 64-bit ops, independent of the
// production layer loop.
TensorD rebuild_forward(const NetworkSpec& spec, const std::vector<TensorD>& w,
                        const std::vector<std::vector<double>>& b, const TensorD& x) {
  std::vector<TensorD> post;
  TensorD cur = x;
  for (const LayerSpec& l : spec.layers) {
    const TensorD in = l.skip_source ? concat_channels(cur, post[static_cast<std::size_t>(*l.skip_source) - 1]) : cur;
    const std::size_t i = static_cast<std::size_t>(l.index) - 1;
    const TensorD z = l.kind == LayerKind::conv ? conv2d<double>(in, w[i], b[i], l.geometry)
                                                : tconv2d<double>(in, w[i], b[i], l.geometry);
    cur = activation<double>(z, l.activation);
    post.push_back(cur);
  }
  return cur;
}

void overwrite(const std::filesystem::path& path, std::size_t offset, const std::string& bytes) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("canonical generator shape chain") {
  const NetworkSpec g = build_generator(Profile::canonical_256);
  REQUIRE(g.layers.size() == 16);
  const auto chain = shape_chain(g);
  const std::size_t enc[] = {128, 64, 32, 16, 8, 4, 2, 1};
  for (std::size_t i = 0; i < 8; ++i) CHECK(chain[i].h == enc[i]);
  for (std::size_t i = 0; i < 8; ++i) CHECK(chain[8 + i].h == (2u << i));
  CHECK(g.layer(10).in_channels == 1024);
  CHECK(g.layer(16).out_channels == 1);
  CHECK(g.layer(16).activation.kind == ActivationKind::tanh);
  for (const auto& l : g.layers) {
    if (!l.skip_source) continue;
    CHECK(chain[static_cast<std::size_t>(*l.skip_source) - 1].h == chain[static_cast<std::size_t>(l.index) - 2].h);
  }
}

TEST_CASE("desk generator and discriminators") {
  const NetworkSpec g = build_generator("desk-32");
  CHECK(g.layers.size() == 10);
  CHECK(shape_chain(g).back() == Shape{1, 1, 32, 32});
  for (const Profile p : {Profile::canonical_256, Profile::desk_32}) {
    const NetworkSpec d = build_discriminator(p);
    CHECK(d.role == NetworkRole::discriminator);
    CHECK(d.in_channels == 4);
    REQUIRE(d.layers.size() == 5);
    CHECK(d.layer(5).out_channels == 1);
    CHECK(d.layer(5).activation.kind == ActivationKind::sigmoid);
    CHECK(shape_chain(d).back().h > 1);
  }
  CHECK_THROWS(build_generator("desk-64"));
  CHECK(parse_profile(to_string(Profile::desk_32)) == Profile::desk_32);
  CHECK(parse_role("discriminator") == NetworkRole::discriminator);
  CHECK(parse_layer_kind("tconv") == LayerKind::tconv);
}

TEST_CASE("inconsistent specs are rejected with the layer named") {
  NetworkSpec g = build_generator(Profile::desk_32);
  g.layers[6].in_channels += 1;
  try {
    shape_chain(g);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 7") != std::string::npos);
  }
}

TEST_CASE("init_params is deterministic with zero biases and 0.02 spread") {
  const NetworkSpec g = build_generator(Profile::canonical_256);
  const ParamStore a = init_params(g, 42);
  CHECK(a == init_params(g, 42));
  CHECK_FALSE(a == init_params(g, 43));
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const auto& l : a.layers()) {
    for (float b : l.bias) CHECK(b == 0.0f);
    for (float w : l.weights.data()) {
      sum += w;
      sq += static_cast<double>(w) * w;
      ++n;
    }
  }
  REQUIRE(n >= 100000);
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  CHECK(std::abs(sd - 0.02) < 0.001);
  CHECK(a.parameter_count() == n + std::accumulate(a.layers().begin(), a.layers().end(), std::size_t{0},
                                                  [](std::size_t s, const LayerParams& l) { return s + l.bias.size(); }));
}

TEST_CASE("zero network outputs tanh(0)") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  Draw d(1);
  const Tensor y = forward(g, ParamStore::zeros(g), d.tensor<float>(g.input_shape(2))).output;
  CHECK(y.shape() == Shape{2, 1, 32, 32});
  for (float v : y.data()) CHECK(v == 0.0f);
}

TEST_CASE("forward is deterministic and range-bounded") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  const NetworkSpec dn = build_discriminator(Profile::desk_32);
  const ParamStore pg = init_params(g, 3), pd = init_params(dn, 4);
  Draw d(2);
  const Tensor x = d.tensor<float>(g.input_shape(3));
  const ForwardResult a = forward(g, pg, x), b = forward(g, pg, x);
  CHECK(a.output == b.output);
  CHECK(a.cache.layers.size() == g.layers.size());
  for (float v : a.output.data()) CHECK((v >= -1.0f && v <= 1.0f));
  const Tensor dy = forward(dn, pd, concat_channels(x, a.output)).output;
  for (float v : dy.data()) CHECK((v > 0.0f && v < 1.0f));
}

TEST_CASE("forward rejects mismatched inputs and params") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  const ParamStore p = init_params(g, 3);
  CHECK_THROWS_AS(forward(g, p, Tensor({1, 3, 16, 16})), ShapeError);
  CHECK_THROWS_AS(forward(g, p, Tensor({1, 4, 32, 32})), ShapeError);
  ParamStore bad = p;
  bad.layer(4).bias.pop_back();
  try {
    forward(g, bad, Tensor(g.input_shape(1)));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 4") != std::string::npos);
  }
  CHECK_THROWS_AS(forward(build_discriminator(Profile::desk_32), p, Tensor({1, 4, 32, 32})), ShapeError);
}

TEST_CASE("network backward agrees with finite differences of a double-precision rebuild") {
  for (const NetworkRole role : {NetworkRole::generator, NetworkRole::discriminator}) {
    const NetworkSpec spec =
        role == NetworkRole::generator ? build_generator(Profile::desk_32) : build_discriminator(Profile::desk_32);
    ParamStore p = init_params(spec, 9);
    Draw d(3);
    for (auto& l : p.layers())
      for (float& b : l.bias) b = static_cast<float>(d.real(-0.01, 0.01));
    const Tensor x = d.tensor<float>(spec.input_shape(1));
    const ForwardResult f = forward(spec, p, x);
    const Tensor r = d.tensor<float>(f.output.shape());
    const NetworkGrads g = backward(spec, p, f.cache, r);

    std::vector<TensorD> w;
    std::vector<std::vector<double>> b;
    for (const auto& l : p.layers()) {
      w.push_back(l.weights.cast<double>());
      b.emplace_back(l.bias.begin(), l.bias.end());
    }
    const TensorD xd = x.cast<double>();
    const TensorD rd = r.cast<double>();
    const auto objective = [&] { return test::dot(rebuild_forward(spec, w, b, xd), rd); };
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
      const Tensor& gw = g.params.layers()[li].weights;
      for (int t = 0; t < 4; ++t) {
        const std::size_t i = d.index(0, gw.size() - 1);
        const double keep = w[li][i];
        w[li][i] = keep + h;
        const double up = objective();
        w[li][i] = keep - h;
        const double down = objective();
        w[li][i] = keep;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - gw[i]) / std::max(std::abs(fd), 1e-3));
      }
      const double keep = b[li][0];
      b[li][0] = keep + h;
      const double up = objective();
      b[li][0] = keep - h;
      const double down = objective();
      b[li][0] = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.params.layers()[li].bias[0]) / std::max(std::abs(fd), 1e-3));
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("checkpoint round trip is bit-identical") {
  TempDir dir("ckpt");
  for (const auto& spec : {build_generator(Profile::desk_32), build_discriminator(Profile::desk_32)}) {
    ParamStore p = init_params(spec, 11);
    p.layer(2).bias[3] = -0.125f;
    const auto path = dir / (to_string(spec.role) + ".ckpt");
    save_checkpoint(spec, p, path);
    const Checkpoint c = load_checkpoint(path);
    CHECK(c.spec == spec);
    CHECK(c.params == p);
  }
}

TEST_CASE("checkpoint error paths are distinct") {
  TempDir dir("ckpt_err");
  const NetworkSpec spec = build_generator(Profile::desk_32);
  const auto good = dir / "good.ckpt";
  save_checkpoint(spec, init_params(spec, 1), good);
  const auto bytes = test::file_bytes(good);
  const auto copy = [&](const std::string& name) {
    const auto p = dir / name;
    std::filesystem::copy_file(good, p);
    return p;
  };

  const auto magic = copy("magic.ckpt");
  overwrite(magic, 0, "NOTSEGX!");
  CHECK_THROWS_AS(load_checkpoint(magic), NotACheckpointError);

  const auto version = copy("version.ckpt");
  overwrite(version, 8, std::string("\x02", 1));
  CHECK_THROWS_AS(load_checkpoint(version), VersionMismatchError);

  const auto truncated = copy("truncated.ckpt");
  std::filesystem::resize_file(truncated, bytes.size() - 1000);
  CHECK_THROWS_AS(load_checkpoint(truncated), IntegrityError);

  const auto extra = copy("extra.ckpt");
  {
    std::ofstream f(extra, std::ios::app | std::ios::binary);
    f.write("\0\0\0\0", 4);
  }
  CHECK_THROWS_AS(load_checkpoint(extra), IntegrityError);

  const auto shape = copy("shape.ckpt");
  const std::string text(bytes.begin(), bytes.end());
  const std::string needle = "\"weight_shape\":[64,3,4,4]";
  const auto at = text.find(needle);
  REQUIRE(at != std::string::npos);
  overwrite(shape, at, "\"weight_shape\":[64,3,4,5]");
  CHECK_THROWS_AS(load_checkpoint(shape), InconsistentShapeError);

  const auto tiny = dir / "tiny.ckpt";
  {
    std::ofstream f(tiny, std::ios::binary);
    f << "SEGX";
  }
  CHECK_THROWS_AS(load_checkpoint(tiny), CheckpointError);
  CHECK_THROWS(load_checkpoint(dir / "missing.ckpt"));
  CHECK_THROWS_AS(save_checkpoint(spec, init_params(build_discriminator(Profile::desk_32), 1), dir / "x.ckpt"),
                  ShapeError);
}

}  // TEST_SUITE
