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

#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "segx/checkpoint.hpp"
#include "segx/lrp.hpp"
#include "support.hpp"

using namespace segx;
using segx::test::Draw;
using segx::test::TempDir;

namespace {

ParamStore zero_bias_params(const NetworkSpec& spec, std::uint64_t seed) {
  ParamStore p = init_params(spec, seed);
  for (auto& l : p.layers()) std::fill(l.bias.begin(), l.bias.end(), 0.0f);
  return p;
}

ParamStore biased_params(const NetworkSpec& spec, std::uint64_t seed) {
  ParamStore p = init_params(spec, seed);
  Draw d(static_cast<std::uint32_t>(seed));
  for (auto& l : p.layers())
    for (float& b : l.bias) b = static_cast<float>(d.real(-0.05, 0.05));
  return p;
}

LrpConfig strict(RelevanceTarget t = RelevanceTarget::full_output()) {
  LrpConfig c;
  c.epsilon = 1e-12;
  c.include_bias_in_denominator = false;
  c.target = t;
  return c;
}

ActivationCache output_only(const Tensor& out) {
  ActivationCache c;
  c.layers.resize(1);
  c.layers[0].post = out;
  return c;
}

}  // namespace

TEST_SUITE("lrp") {

TEST_CASE("single unit hand example") {
  const Tensor a({1, 2, 1, 1}, {1.0f, 2.0f});
  const Tensor w({1, 2, 1, 1}, {0.5f, 0.25f});
  const Tensor r({1, 1, 1, 1}, {1.0f});
  LrpConfig cfg;
  cfg.epsilon = 0.0;
  const Tensor rp = propagate_linear(LayerKind::conv, a, w, {}, ConvGeometry::square(1, 1, 0), r, cfg);
  CHECK(rp[0] == 0.5f);
  CHECK(rp[1] == 0.5f);

  RelevanceMap maps;
  maps.input = rp;
  maps.layers = {r};
  maps.layer_inputs = {rp};
  const ConservationReport rep = conservation_report(maps);
  CHECK(rep.leakage.at(0) == 0.0);
  CHECK(rep.end_to_end_leakage == 0.0);
}

TEST_CASE("zero relevance stays zero and shapes are checked") {
  Draw d(3);
  const Tensor a = d.tensor<float>({1, 3, 8, 8});
  const Tensor w = d.tensor<float>({4, 3, 4, 4});
  const ConvGeometry g = ConvGeometry::square(4, 2, 1);
  const Tensor rp = propagate_linear(LayerKind::conv, a, w, {}, g, Tensor({1, 4, 4, 4}), LrpConfig{});
  CHECK(rp.shape() == a.shape());
  for (float v : rp.data()) CHECK(v == 0.0f);
  CHECK_THROWS_AS(propagate_linear(LayerKind::conv, a, w, {}, g, Tensor({1, 4, 4, 5}), LrpConfig{}), ShapeError);
  LrpConfig neg;
  neg.epsilon = -1.0;
  CHECK_THROWS(propagate_linear(LayerKind::conv, a, w, {}, g, Tensor({1, 4, 4, 4}), neg));
}

TEST_CASE("single transitions conserve relevance without bias or stabilizer") {
  Draw d(5);
  for (int trial = 0; trial < 20; ++trial) {
    const bool transposed = trial % 2 == 1;
    const ConvGeometry g = ConvGeometry::square(4, 2, 1);
    const Tensor a = d.tensor<float>({1, 3, 8, 8}, 0.0, 1.0);
    const Tensor w = transposed ? d.tensor<float>({3, 2, 4, 4}) : d.tensor<float>({2, 3, 4, 4});
    const Shape out = transposed ? Shape{1, 2, 16, 16} : Shape{1, 2, 4, 4};
    const Tensor r = d.tensor<float>(out, 0.0, 1.0);
    const Tensor rp = propagate_linear(transposed ? LayerKind::tconv : LayerKind::conv, a, w, {}, g, r, strict());
    CHECK(test::rel_err(test::total(rp), test::total(r)) < 1e-4);
  }
}

TEST_CASE("bias in the denominator absorbs relevance") {
  const Tensor a({1, 2, 1, 1}, {1.0f, 2.0f});
  const Tensor w({1, 2, 1, 1}, {0.5f, 0.25f});
  const std::vector<float> b{1.0f};
  LrpConfig cfg;
  cfg.epsilon = 0.0;
  const Tensor rp = propagate_linear(LayerKind::conv, a, w, b, ConvGeometry::square(1, 1, 0), Tensor({1, 1, 1, 1}, {1.0f}), cfg);
  CHECK(rp[0] == doctest::Approx(0.25));
  CHECK(rp[1] == doctest::Approx(0.25));
  cfg.include_bias_in_denominator = false;
  const Tensor kept =
      propagate_linear(LayerKind::conv, a, w, b, ConvGeometry::square(1, 1, 0), Tensor({1, 1, 1, 1}, {1.0f}), cfg);
  CHECK(kept[0] == 0.5f);
}

TEST_CASE("output seeding") {
  Tensor out({1, 1, 4, 4}, -0.3f);
  out.at(0, 0, 1, 2) = 0.8f;
  out.at(0, 0, 3, 3) = 0.4f;
  const ActivationCache cache = output_only(out);
  const Tensor one = init_output_relevance(cache, RelevanceTarget::single_neuron(0, 1, 2));
  CHECK(one.sum() == 0.8f);
  CHECK(one.at(0, 0, 1, 2) == 0.8f);
  CHECK_THROWS(init_output_relevance(cache, RelevanceTarget::single_neuron(0, 4, 0)));
  CHECK_THROWS(init_output_relevance(cache, RelevanceTarget::single_neuron(1, 0, 0)));
  const Tensor mask = init_output_relevance(cache, RelevanceTarget::mask_region(0.0f));
  CHECK(mask.sum() == 0.8f + 0.4f);
  CHECK(init_output_relevance(cache, RelevanceTarget::mask_region(0.5f)).sum() == 0.8f);
  CHECK(init_output_relevance(cache, RelevanceTarget::mask_region(0.9f)).sum() == 0.0f);
  CHECK_THROWS(init_output_relevance(cache, RelevanceTarget::mask_region(1.0f)));
  CHECK(init_output_relevance(cache, RelevanceTarget::full_output()) == out);
}

TEST_CASE("activation and concat rules") {
  Draw d(7);
  const Tensor r = d.tensor<float>({1, 5, 3, 3});
  CHECK(propagate_activation(r) == r);
  const auto [main, skip] = propagate_concat(r, 3);
  CHECK(main.shape().c == 3);
  CHECK(skip.shape().c == 2);
  CHECK(main.sum() + skip.sum() == doctest::Approx(r.sum()).epsilon(1e-6));
  Tensor r2 = r;
  for (std::size_t c = 3; c < 5; ++c)
    for (std::size_t i = 0; i < 9; ++i) r2.plane(0, c)[i] = 0.0f;
  CHECK(propagate_concat(r2, 3).second.sum() == 0.0f);
  CHECK_THROWS(propagate_concat(r, 5));
}

TEST_CASE("zero network yields all-zero maps with zero leakage") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  Draw d(9);
  const Explanation e = explain(g, ParamStore::zeros(g), d.tensor<float>(g.input_shape(1)), LrpConfig{});
  CHECK(e.maps.input.sum() == 0.0f);
  for (const auto& m : e.maps.layers) CHECK(m.sum() == 0.0f);
  for (double v : e.conservation.leakage) CHECK(v == 0.0);
  CHECK(e.conservation.max_leakage() == 0.0);
}

TEST_CASE("empty mask target yields all-zero maps") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  Draw d(10);
  LrpConfig cfg;
  cfg.target = RelevanceTarget::mask_region(0.99f);
  const Explanation e = explain(g, init_params(g, 1), d.tensor<float>(g.input_shape(1)), cfg);
  CHECK(e.seed.sum() == 0.0f);
  for (float v : e.maps.input.data()) CHECK(v == 0.0f);
}

TEST_CASE("desk generator conserves relevance at every transition") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  Draw d(11);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Explanation e = explain(g, zero_bias_params(g, seed), d.tensor<float>(g.input_shape(1)), strict());
    CHECK(e.conservation.leakage.size() == g.layers.size());
    CHECK(e.conservation.max_leakage() <= 1e-3);
    CHECK(e.conservation.end_to_end_leakage <= 1e-3);
    CHECK(e.maps.input.shape() == g.input_shape(1));
    CHECK(test::rel_err(e.conservation.layer_sums.back(), test::total(e.seed)) < 1e-6);
  }
}

TEST_CASE("biased networks leak but stay finite") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  Draw d(12);
  LrpConfig cfg;
  cfg.target = RelevanceTarget::full_output();
  const Explanation e = explain(g, biased_params(g, 4), d.tensor<float>(g.input_shape(1)), cfg);
  CHECK(std::isfinite(e.conservation.max_leakage()));
  CHECK(e.conservation.max_leakage() > 0.0);
}

TEST_CASE("relevance is linear in the seed and scale covariant") {
  const NetworkSpec g = build_generator(Profile::desk_32);
  const ParamStore p = biased_params(g, 6);
  Draw d(13);
  const ForwardResult f = forward(g, p, d.tensor<float>(g.input_shape(1)));
  const LrpConfig cfg;
  const Tensor s1 = d.tensor<float>(f.output.shape());
  const Tensor s2 = d.tensor<float>(f.output.shape());
  Tensor s12 = s1, s3 = s1;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    s12[i] = s1[i] + s2[i];
    s3[i] = 3.0f * s1[i];
  }
  const RelevanceMap m1 = propagate(g, p, f.cache, s1, cfg);
  const RelevanceMap m2 = propagate(g, p, f.cache, s2, cfg);
  const RelevanceMap m12 = propagate(g, p, f.cache, s12, cfg);
  const RelevanceMap m3 = propagate(g, p, f.cache, s3, cfg);
  Tensor sum = m1.input;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += m2.input[i];
  CHECK(test::max_rel_err(m12.input, sum) < 1e-4);
  Tensor tripled = m1.input;
  for (float& v : tripled.data()) v *= 3.0f;
  CHECK(test::max_rel_err(m3.input, tripled) < 1e-5);
  for (std::size_t l = 0; l < m1.layers.size(); ++l) {
    Tensor t = m1.layers[l];
    for (float& v : t.data()) v *= 3.0f;
    CHECK(test::max_rel_err(m3.layers[l], t) < 1e-5);
  }
}

TEST_CASE("propagation is defined for the generator only") {
  const NetworkSpec dn = build_discriminator(Profile::desk_32);
  CHECK_THROWS(explain(dn, init_params(dn, 1), Tensor(dn.input_shape(1)), LrpConfig{}));
}

TEST_CASE("raw relevance file names every map") {
  TempDir dir("lrp");
  const NetworkSpec g = build_generator(Profile::desk_32);
  Draw d(15);
  const Explanation e = explain(g, init_params(g, 2), d.tensor<float>(g.input_shape(1)), strict());
  save_relevance(e.maps, dir / "r.bin");
  const FloatBlockFile f = read_float_blocks(dir / "r.bin");
  const auto h = nlohmann::json::parse(f.header);
  CHECK(h.at("format") == "segxplain-relevance");
  REQUIRE(h.at("maps").size() == 1 + g.layers.size());
  CHECK(h.at("maps")[0].at("name") == "input");
  CHECK(h.at("maps")[10].at("name") == "L10");
  std::size_t expected = e.maps.input.size();
  for (const auto& m : e.maps.layers) expected += m.size();
  CHECK(f.values.size() == expected);
  CHECK(f.values[5] == e.maps.input[5]);
}

}  // TEST_SUITE
