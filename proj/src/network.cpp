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

#include "segx/network.hpp"

#include <algorithm>
#include <cmath>

#include "segx/rng.hpp"

namespace segx {

std::string to_string(Profile p) {
  return p == Profile::canonical_256 ? "canonical-256" : "desk-32";
}

std::string to_string(NetworkRole r) {
  return r == NetworkRole::generator ? "generator" : "discriminator";
}

std::string to_string(LayerKind k) { return k == LayerKind::conv ? "conv" : "tconv"; }

Profile parse_profile(const std::string& name) {
  if (name == "canonical-256") return Profile::canonical_256;
  if (name == "desk-32") return Profile::desk_32;
  throw Error("unknown profile '" + name + "' (expected canonical-256 or desk-32)");
}

NetworkRole parse_role(const std::string& name) {
  if (name == "generator") return NetworkRole::generator;
  if (name == "discriminator") return NetworkRole::discriminator;
  throw Error("unknown network role '" + name + "'");
}

LayerKind parse_layer_kind(const std::string& name) {
  if (name == "conv") return LayerKind::conv;
  if (name == "tconv") return LayerKind::tconv;
  throw Error("unknown layer kind '" + name + "'");
}

namespace {

struct ProfileDims {
  std::size_t size;
  std::vector<std::size_t> encoder;
  std::vector<std::size_t> decoder;
};

ProfileDims generator_dims(Profile p) {
  if (p == Profile::canonical_256) {
    return {256, {64, 128, 256, 512, 512, 512, 512, 512}, {512, 512, 512, 512, 256, 128, 64, 1}};
  }
  return {32, {64, 128, 256, 512, 512}, {512, 256, 128, 64, 1}};
}

std::size_t profile_size(Profile p) { return p == Profile::canonical_256 ? 256 : 32; }

const ConvGeometry kDown = ConvGeometry::square(4, 2, 1);
const ConvGeometry kFlat = ConvGeometry::square(4, 1, 1);

}  // namespace

NetworkSpec build_generator(Profile profile) {
  const ProfileDims d = generator_dims(profile);
  const int depth = static_cast<int>(d.encoder.size());
  NetworkSpec spec;
  spec.role = NetworkRole::generator;
  spec.profile_name = to_string(profile);
  spec.in_channels = 3;
  spec.input_h = spec.input_w = d.size;
  for (int i = 1; i <= depth; ++i) {
    LayerSpec l;
    l.index = i;
    l.kind = LayerKind::conv;
    l.in_channels = i == 1 ? spec.in_channels : d.encoder[i - 2];
    l.out_channels = d.encoder[i - 1];
    l.activation = Activation::leaky(0.2f);
    l.geometry = kDown;
    spec.layers.push_back(l);
  }
  // Decoder layer k (1-based) sits at index depth + k; from k = 2 on it also
  // receives the mirrored encoder output depth + 1 - k.
  for (int k = 1; k <= depth; ++k) {
    LayerSpec l;
    l.index = depth + k;
    l.kind = LayerKind::tconv;
    l.out_channels = d.decoder[k - 1];
    l.activation = k == depth ? Activation::tanh() : Activation::relu();
    l.geometry = kDown;
    if (k == 1) {
      l.in_channels = d.encoder[depth - 1];
    } else {
      const int source = depth + 1 - k;
      l.skip_source = source;
      l.in_channels = d.decoder[k - 2] + d.encoder[source - 1];
    }
    spec.layers.push_back(l);
  }
  return spec;
}

NetworkSpec build_discriminator(Profile profile) {
  const std::vector<std::size_t> filters{64, 128, 256, 512, 1};
  const std::vector<ConvGeometry> geoms{kDown, kDown, kDown, kFlat, kFlat};
  NetworkSpec spec;
  spec.role = NetworkRole::discriminator;
  spec.profile_name = to_string(profile);
  spec.in_channels = 4;  // RGB image + mask
  spec.input_h = spec.input_w = profile_size(profile);
  for (std::size_t i = 0; i < filters.size(); ++i) {
    LayerSpec l;
    l.index = static_cast<int>(i) + 1;
    l.kind = LayerKind::conv;
    l.in_channels = i == 0 ? spec.in_channels : filters[i - 1];
    l.out_channels = filters[i];
    l.activation = i + 1 == filters.size() ? Activation::sigmoid() : Activation::leaky(0.2f);
    l.geometry = geoms[i];
    spec.layers.push_back(l);
  }
  return spec;
}

NetworkSpec build_generator(const std::string& profile) { return build_generator(parse_profile(profile)); }
NetworkSpec build_discriminator(const std::string& profile) { return build_discriminator(parse_profile(profile)); }

Shape weight_shape(const LayerSpec& l) {
  if (l.kind == LayerKind::conv) return {l.out_channels, l.in_channels, l.geometry.kh, l.geometry.kw};
  return {l.in_channels, l.out_channels, l.geometry.kh, l.geometry.kw};
}

namespace {

std::string layer_name(const NetworkSpec& spec, const LayerSpec& l) {
  return to_string(spec.role) + " layer " + std::to_string(l.index) + " (" + to_string(l.kind) + ")";
}

}  // namespace

std::vector<Shape> shape_chain(const NetworkSpec& spec, std::size_t batch) {
  if (spec.role == NetworkRole::generator) {
    std::size_t downs = 0;
    for (const auto& l : spec.layers) {
      if (l.kind == LayerKind::conv && l.geometry.sh == 2) ++downs;
    }
    const std::size_t factor = std::size_t{1} << downs;
    if (spec.input_h % factor != 0 || spec.input_w % factor != 0) {
      throw ShapeError("generator input " + std::to_string(spec.input_h) + "x" + std::to_string(spec.input_w) +
                       " is not divisible by 2^" + std::to_string(downs));
    }
  }
  std::vector<Shape> out;
  Shape cur = spec.input_shape(batch);
  for (const auto& l : spec.layers) {
    const std::string name = layer_name(spec, l);
    if (l.index != static_cast<int>(out.size()) + 1) throw ShapeError(name + ": layers out of order");
    std::size_t channels = cur.c;
    if (l.skip_source) {
      const int s = *l.skip_source;
      if (s < 1 || s >= l.index) throw ShapeError(name + ": skip source " + std::to_string(s) + " is not earlier");
      const Shape& skip = out[static_cast<std::size_t>(s - 1)];
      if (skip.h != cur.h || skip.w != cur.w) {
        throw ShapeError(name + ": skip from layer " + std::to_string(s) + " has spatial size " + skip.str() +
                         " but the decoder path has " + cur.str());
      }
      channels += skip.c;
    }
    if (channels != l.in_channels) {
      throw ShapeError(name + ": expects " + std::to_string(l.in_channels) + " input channels, chain provides " +
                       std::to_string(channels));
    }
    const auto [h, w] =
        l.kind == LayerKind::conv ? l.geometry.conv_output(cur.h, cur.w) : l.geometry.tconv_output(cur.h, cur.w);
    cur = Shape{batch, l.out_channels, h, w};
    out.push_back(cur);
  }
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool ParamStore::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const LayerParams& l) {
    return l.weights.all_finite() &&
           std::all_of(l.bias.begin(), l.bias.end(), [](float b) { return std::isfinite(b); });
  });
}

void ParamStore::check_against(const NetworkSpec& spec) const {
  if (role_ != spec.role) {
    throw ShapeError("parameters are for a " + to_string(role_) + ", spec describes a " + to_string(spec.role));
  }
  if (layers_.size() != spec.layers.size()) {
    throw ShapeError("parameters have " + std::to_string(layers_.size()) + " layers, spec has " +
                     std::to_string(spec.layers.size()));
  }
  for (const auto& l : spec.layers) {
    const LayerParams& p = layer(l.index);
    if (p.weights.shape() != weight_shape(l)) {
      throw ShapeError(layer_name(spec, l) + ": weights " + p.weights.shape().str() + ", expected " +
                       weight_shape(l).str());
    }
    if (p.bias.size() != l.out_channels) {
      throw ShapeError(layer_name(spec, l) + ": bias has " + std::to_string(p.bias.size()) + " entries, expected " +
                       std::to_string(l.out_channels));
    }
  }
}

ParamStore ParamStore::zeros(const NetworkSpec& spec) {
  std::vector<LayerParams> layers;
  layers.reserve(spec.layers.size());
  for (const auto& l : spec.layers) {
    layers.push_back({Tensor(weight_shape(l)), std::vector<float>(l.out_channels, 0.0f)});
  }
  return ParamStore(spec.role, std::move(layers));
}

ParamStore init_params(const NetworkSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  ParamStore store = ParamStore::zeros(spec);
  for (auto& l : store.layers()) {
    for (float& w : l.weights.data()) w = static_cast<float>(rng.normal(0.0, 0.02));
  }
  return store;
}

namespace {

Tensor apply_linear(const LayerSpec& l, const LayerParams& p, const Tensor& input) {
  const std::span<const float> bias(p.bias);
  return l.kind == LayerKind::conv ? conv2d<float>(input, p.weights, bias, l.geometry)
                                   : tconv2d<float>(input, p.weights, bias, l.geometry);
}

void accumulate(std::optional<Tensor>& slot, Tensor&& g) {
  if (!slot) {
    slot = std::move(g);
    return;
  }
  if (slot->shape() != g.shape()) throw ShapeError("gradient shape mismatch during accumulation");
  float* dst = slot->raw();
  const float* src = g.raw();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

}  // namespace

ForwardResult forward(const NetworkSpec& spec, const ParamStore& params, const Tensor& input) {
  const Shape& is = input.shape();
  if (is.c != spec.in_channels || is.h != spec.input_h || is.w != spec.input_w) {
    throw ShapeError(to_string(spec.role) + " input " + is.str() + " does not match the " + spec.profile_name +
                     " profile (" + std::to_string(spec.in_channels) + "x" + std::to_string(spec.input_h) + "x" +
                     std::to_string(spec.input_w) + ")");
  }
  params.check_against(spec);
  ForwardResult r;
  r.cache.input = input;
  r.cache.layers.reserve(spec.layers.size());
  const Tensor* cur = &r.cache.input;
  for (const auto& l : spec.layers) {
    try {
      LayerRecord rec;
      rec.input = l.skip_source ? concat_channels(*cur, r.cache.layer(*l.skip_source).post) : *cur;
      rec.pre = apply_linear(l, params.layer(l.index), rec.input);
      rec.post = activation(rec.pre, l.activation);
      r.cache.layers.push_back(std::move(rec));
    } catch (const ShapeError& e) {
      throw ShapeError(layer_name(spec, l) + ": " + e.what());
    }
    cur = &r.cache.layers.back().post;
  }
  r.output = *cur;
  return r;
}

NetworkGrads backward(const NetworkSpec& spec, const ParamStore& params, const ActivationCache& cache,
                      const Tensor& grad_output, GradRequest want) {
  if (cache.layers.size() != spec.layers.size()) {
    throw ShapeError("activation cache has " + std::to_string(cache.layers.size()) + " layers, spec has " +
                     std::to_string(spec.layers.size()));
  }
  if (grad_output.shape() != cache.layers.back().post.shape()) {
    throw ShapeError("output gradient " + grad_output.shape().str() + " does not match network output " +
                     cache.layers.back().post.shape().str());
  }
  NetworkGrads grads;
  if (want.params) grads.params = ParamStore(spec.role, std::vector<LayerParams>(spec.layers.size()));

  // Upstream gradient per layer output; index 0 is the network input.
  std::vector<std::optional<Tensor>> upstream(spec.layers.size() + 1);
  upstream.back() = grad_output;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    const LayerSpec& l = *it;
    const auto idx = static_cast<std::size_t>(l.index);
    const LayerRecord& rec = cache.layer(l.index);
    Tensor gpost = upstream[idx] ? std::move(*upstream[idx]) : Tensor(rec.post.shape());
    upstream[idx].reset();
    const Tensor gpre = activation_backward(rec.pre, l.activation, gpost);
    const bool need_input = l.index > 1 || want.input;
    const GradRequest req{need_input, want.params};
    const LayerParams& p = params.layer(l.index);
    LinearGrads<float> lg = l.kind == LayerKind::conv ? conv2d_backward<float>(rec.input, p.weights, l.geometry, gpre, req)
                                                      : tconv2d_backward<float>(rec.input, p.weights, l.geometry, gpre, req);
    if (want.params) grads.params.layer(l.index) = LayerParams{std::move(lg.weights), std::move(lg.bias)};
    if (!need_input) continue;
    if (l.skip_source) {
      const std::size_t main_c = l.in_channels - cache.layer(*l.skip_source).post.shape().c;
      auto [gmain, gskip] = split_channels(lg.input, main_c);
      accumulate(upstream[idx - 1], std::move(gmain));
      accumulate(upstream[static_cast<std::size_t>(*l.skip_source)], std::move(gskip));
    } else {
      accumulate(upstream[idx - 1], std::move(lg.input));
    }
  }
  if (want.input) grads.input = std::move(*upstream[0]);
  return grads;
}

}  // namespace segx
