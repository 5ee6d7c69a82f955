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

#include "segx/lrp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "json.hpp"
#include "segx/checkpoint.hpp"

namespace segx {

double ConservationReport::max_leakage() const {
  double m = 0.0;
  for (double v : leakage) m = std::max(m, v);
  return m;
}

Tensor init_output_relevance(const ActivationCache& cache, const RelevanceTarget& target) {
  if (cache.layers.empty()) throw Error("init_output_relevance: empty activation cache");
  const Tensor& out = cache.layers.back().post;
  const Shape& s = out.shape();
  Tensor seed(s);
  switch (target.mode) {
    case RelevanceTarget::Mode::single_neuron:
      if (target.channel >= s.c || target.y >= s.h || target.x >= s.w) {
        throw Error("relevance target (" + std::to_string(target.channel) + "," + std::to_string(target.y) + "," +
                    std::to_string(target.x) + ") lies outside the output " + std::to_string(s.c) + "x" +
                    std::to_string(s.h) + "x" + std::to_string(s.w));
      }
      for (std::size_t n = 0; n < s.n; ++n) {
        seed.at(n, target.channel, target.y, target.x) = out.at(n, target.channel, target.y, target.x);
      }
      break;
    case RelevanceTarget::Mode::mask_region:
      if (!(target.threshold > -1.0f && target.threshold < 1.0f)) {
        throw Error("mask_region threshold must lie in (-1, 1)");
      }
      for (std::size_t i = 0; i < out.size(); ++i) seed[i] = out[i] > target.threshold ? out[i] : 0.0f;
      break;
    case RelevanceTarget::Mode::full_output:
      seed = out;
      break;
  }
  return seed;
}

Tensor propagate_linear(LayerKind kind, const Tensor& a_prev, const Tensor& weights, std::span<const float> bias,
                        const ConvGeometry& geom, const Tensor& r_next, const LrpConfig& config) {
  if (!(config.epsilon >= 0.0)) throw Error("LRP epsilon must be >= 0");
  const std::span<const float> zbias = config.include_bias_in_denominator ? bias : std::span<const float>{};
  const Tensor z = kind == LayerKind::conv ? conv2d<float>(a_prev, weights, zbias, geom)
                                           : tconv2d<float>(a_prev, weights, zbias, geom);
  if (z.shape() != r_next.shape()) {
    throw ShapeError("propagate_linear: relevance " + r_next.shape().str() + " does not match layer output " +
                     z.shape().str());
  }
  const float eps = static_cast<float>(config.epsilon);
  Tensor s(z.shape());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const float zk = z[k];
    const float denom = zk + (zk >= 0.0f ? eps : -eps);
    s[k] = denom != 0.0f ? r_next[k] / denom : 0.0f;
  }
  Tensor c = kind == LayerKind::conv ? conv2d_adjoint<float>(s, weights, geom, a_prev.shape())
                                     : conv2d<float>(s, weights, {}, geom);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] *= a_prev[j];
  return c;
}

Tensor propagate_activation(const Tensor& r) { return r; }

std::pair<Tensor, Tensor> propagate_concat(const Tensor& r_concat, std::size_t channels_a) {
  return split_channels(r_concat, channels_a);
}

namespace {

void add_to(std::optional<Tensor>& slot, Tensor&& r) {
  if (!slot) {
    slot = std::move(r);
    return;
  }
  for (std::size_t i = 0; i < r.size(); ++i) (*slot)[i] += r[i];
}

double sum_of(const Tensor& t) {
  double acc = 0.0;
  for (float v : t.data()) acc += v;
  return acc;
}

double relative_gap(double in, double out) {
  const double gap = std::abs(in - out);
  if (gap == 0.0) return 0.0;
  if (out == 0.0) return std::numeric_limits<double>::infinity();
  return gap / std::abs(out);
}

}  // namespace

RelevanceMap propagate(const NetworkSpec& spec, const ParamStore& params, const ActivationCache& cache,
                       const Tensor& seed, const LrpConfig& config) {
  if (spec.role != NetworkRole::generator) throw Error("LRP is defined for the generator only");
  if (cache.layers.size() != spec.layers.size()) throw ShapeError("activation cache does not match the network");
  if (seed.shape() != cache.layers.back().post.shape()) {
    throw ShapeError("relevance seed " + seed.shape().str() + " does not match the output " +
                     cache.layers.back().post.shape().str());
  }
  const std::size_t depth = spec.layers.size();
  RelevanceMap maps;
  maps.layers.resize(depth);
  maps.layer_inputs.resize(depth);
  std::vector<std::optional<Tensor>> pending(depth + 1);  // [0] = network input
  pending[depth] = seed;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    const LayerSpec& l = *it;
    const auto idx = static_cast<std::size_t>(l.index);
    const LayerRecord& rec = cache.layer(l.index);
    Tensor r_post = pending[idx] ? std::move(*pending[idx]) : Tensor(rec.post.shape());
    pending[idx].reset();
    const LayerParams& p = params.layer(l.index);
    Tensor r_in = propagate_linear(l.kind, rec.input, p.weights, p.bias, l.geometry, propagate_activation(r_post),
                                   config);
    maps.layers[idx - 1] = std::move(r_post);
    maps.layer_inputs[idx - 1] = r_in;
    if (l.skip_source) {
      const std::size_t main_c = l.in_channels - cache.layer(*l.skip_source).post.shape().c;
      auto [r_main, r_skip] = propagate_concat(r_in, main_c);
      add_to(pending[idx - 1], std::move(r_main));
      add_to(pending[static_cast<std::size_t>(*l.skip_source)], std::move(r_skip));
    } else {
      add_to(pending[idx - 1], std::move(r_in));
    }
  }
  maps.input = std::move(*pending[0]);
  return maps;
}

ConservationReport conservation_report(const RelevanceMap& maps) {
  ConservationReport r;
  r.layer_sums.push_back(sum_of(maps.input));
  for (const auto& t : maps.layers) r.layer_sums.push_back(sum_of(t));
  for (std::size_t l = 0; l < maps.layers.size(); ++l) {
    const double in = l < maps.layer_inputs.size() ? sum_of(maps.layer_inputs[l]) : 0.0;
    r.input_sums.push_back(in);
    r.leakage.push_back(relative_gap(in, r.layer_sums[l + 1]));
  }
  r.end_to_end_leakage = maps.layers.empty() ? 0.0 : relative_gap(r.layer_sums.front(), r.layer_sums.back());
  return r;
}

Explanation explain(const NetworkSpec& spec, const ParamStore& params, const Tensor& input, const LrpConfig& config) {
  ForwardResult fwd = forward(spec, params, input);
  Explanation e;
  e.seed = init_output_relevance(fwd.cache, config.target);
  e.maps = propagate(spec, params, fwd.cache, e.seed, config);
  e.conservation = conservation_report(e.maps);
  e.output = std::move(fwd.output);
  return e;
}

void save_relevance(const RelevanceMap& maps, const std::filesystem::path& path) {
  using nlohmann::json;
  json entries = json::array();
  std::vector<std::span<const float>> blocks;
  const auto add = [&](const std::string& name, const Tensor& t) {
    const Shape& s = t.shape();
    entries.push_back({{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}});
    blocks.emplace_back(t.data());
  };
  add("input", maps.input);
  for (std::size_t l = 0; l < maps.layers.size(); ++l) add("L" + std::to_string(l + 1), maps.layers[l]);
  const json header{{"format", "segxplain-relevance"}, {"maps", entries}};
  write_float_blocks(path, header.dump(), blocks);
}

}  // namespace segx
