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

// Generator (encoder-decoder with skip concatenations) and patch
// discriminator, declared as layer lists, plus their parameters and cached
// forward/backward passes.

#ifndef SEGX_NETWORK_HPP_
#define SEGX_NETWORK_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "segx/ops.hpp"
#include "segx/tensor.hpp"

namespace segx {

enum class Profile { canonical_256, desk_32 };
enum class NetworkRole { generator, discriminator };
enum class LayerKind { conv, tconv };

std::string to_string(Profile p);
std::string to_string(NetworkRole r);
std::string to_string(LayerKind k);
/// Throws segx::Error for anything but "canonical-256" / "desk-32".
Profile parse_profile(const std::string& name);
NetworkRole parse_role(const std::string& name);
LayerKind parse_layer_kind(const std::string& name);

struct LayerSpec {
  int index = 0;  // 1-based within its network
  LayerKind kind = LayerKind::conv;
  std::size_t in_channels = 0;  // after any skip concatenation
  std::size_t out_channels = 0;
  Activation activation;
  std::optional<int> skip_source;  // encoder layer concatenated after the previous output
  ConvGeometry geometry;

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  NetworkRole role = NetworkRole::generator;
  std::string profile_name;
  std::size_t in_channels = 0;
  std::size_t input_h = 0;
  std::size_t input_w = 0;
  std::vector<LayerSpec> layers;

  const LayerSpec& layer(int index) const { return layers.at(static_cast<std::size_t>(index - 1)); }
  Shape input_shape(std::size_t batch) const { return {batch, in_channels, input_h, input_w}; }
  bool operator==(const NetworkSpec&) const = default;
};

NetworkSpec build_generator(Profile profile);
NetworkSpec build_discriminator(Profile profile);
NetworkSpec build_generator(const std::string& profile);
NetworkSpec build_discriminator(const std::string& profile);

/// Post-activation output shape of every layer, in order. Also checks the
/// spec's internal consistency (channel counts, skip spatial sizes) and
/// throws ShapeError naming the failing layer.
std::vector<Shape> shape_chain(const NetworkSpec& spec, std::size_t batch = 1);

/// Weight tensor shape of a layer: [out, in, kh, kw] for conv and
/// [in, out, kh, kw] for tconv.
Shape weight_shape(const LayerSpec& layer);

struct LayerParams {
  Tensor weights;
  std::vector<float> bias;

  bool operator==(const LayerParams&) const = default;
};

class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(NetworkRole role, std::vector<LayerParams> layers) : role_(role), layers_(std::move(layers)) {}

  NetworkRole role() const { return role_; }
  std::size_t layer_count() const { return layers_.size(); }
  LayerParams& layer(int index) { return layers_.at(static_cast<std::size_t>(index - 1)); }
  const LayerParams& layer(int index) const { return layers_.at(static_cast<std::size_t>(index - 1)); }
  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Throws ShapeError if any tensor disagrees with `spec`.
  void check_against(const NetworkSpec& spec) const;

  /// All-zero store matching `spec` (used for gradients and the zero network).
  static ParamStore zeros(const NetworkSpec& spec);

  bool operator==(const ParamStore&) const = default;

 private:
  NetworkRole role_ = NetworkRole::generator;
  std::vector<LayerParams> layers_;
};

/// Weights ~ Normal(0, 0.02) drawn from segx::Rng(seed) in layer order,
/// biases zero.
ParamStore init_params(const NetworkSpec& spec, std::uint64_t seed);

struct LayerRecord {
  Tensor input;  // what the linear map consumed (after skip concatenation)
  Tensor pre;    // pre-activation
  Tensor post;   // post-activation
};

struct ActivationCache {
  Tensor input;
  std::vector<LayerRecord> layers;

  const LayerRecord& layer(int index) const { return layers.at(static_cast<std::size_t>(index - 1)); }
};

struct ForwardResult {
  Tensor output;
  ActivationCache cache;
};

/// Runs the layer chain. Throws ShapeError naming the layer on mismatch.
ForwardResult forward(const NetworkSpec& spec, const ParamStore& params, const Tensor& input);

struct NetworkGrads {
  ParamStore params;  // same layout as the network's ParamStore; zeros if not requested
  Tensor input;       // gradient w.r.t. the network input if requested
};

/// Backpropagates `grad_output` (w.r.t. the final post-activation) through a
/// cached forward pass.
NetworkGrads backward(const NetworkSpec& spec, const ParamStore& params, const ActivationCache& cache,
                      const Tensor& grad_output, GradRequest want = {});

}  // namespace segx

#endif  // SEGX_NETWORK_HPP_
