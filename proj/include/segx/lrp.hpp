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

// Layer-wise relevance propagation through the generator.
//
// For a linear layer with inputs a_j, weights w_jk and outputs k, relevance
// moves down by
//
//     R_j = sum_k  a_j w_jk / z~_k  * R_k,   z_k = sum_j a_j w_jk (+ b_k)
//
// where z~_k = z_k + eps * sign(z_k) and sign(0) = +1. It is evaluated as
// s = R / z~ followed by the layer's adjoint map and an elementwise product
// with a. Activations pass relevance through unchanged, and at a skip
// concatenation relevance is split by channel index and added to the source
// encoder layer.

#ifndef SEGX_LRP_HPP_
#define SEGX_LRP_HPP_

#include <filesystem>
#include <utility>
#include <vector>

#include "segx/network.hpp"

namespace segx {

struct RelevanceTarget {
  enum class Mode { single_neuron, mask_region, full_output };

  Mode mode = Mode::mask_region;
  std::size_t channel = 0;
  std::size_t y = 0;
  std::size_t x = 0;
  float threshold = 0.0f;  // mask_region: outputs strictly above it are seeded

  static RelevanceTarget single_neuron(std::size_t c, std::size_t y, std::size_t x) {
    return {Mode::single_neuron, c, y, x, 0.0f};
  }
  static RelevanceTarget mask_region(float threshold = 0.0f) { return {Mode::mask_region, 0, 0, 0, threshold}; }
  static RelevanceTarget full_output() { return {Mode::full_output, 0, 0, 0, 0.0f}; }
};

struct LrpConfig {
  double epsilon = 1e-6;
  bool include_bias_in_denominator = true;
  RelevanceTarget target = RelevanceTarget::mask_region(0.0f);
};

struct RelevanceMap {
  Tensor input;                      // relevance of the network input pixels
  std::vector<Tensor> layers;        // [l-1]: relevance of layer l's output neurons
  std::vector<Tensor> layer_inputs;  // [l-1]: relevance of what layer l consumed
};

struct ConservationReport {
  std::vector<double> layer_sums;   // [0] = input layer, [l] = layer l output
  std::vector<double> input_sums;   // [l-1] = sum over layer l's consumed input
  std::vector<double> leakage;      // [l-1] = |in_l - out_l| / |out_l|
  double end_to_end_leakage = 0.0;  // |input - seed| / |seed|
  double max_leakage() const;
};

/// Output-shaped seed: targeted positions keep their activation, all other
/// entries are exactly zero. Throws if single-neuron coordinates are outside
/// the output.
Tensor init_output_relevance(const ActivationCache& cache, const RelevanceTarget& target);

/// One linear (conv or tconv) step of the rule above. `bias` may be empty.
Tensor propagate_linear(LayerKind kind, const Tensor& a_prev, const Tensor& weights, std::span<const float> bias,
                        const ConvGeometry& geom, const Tensor& r_next, const LrpConfig& config);

/// Activations are relevance-transparent.
Tensor propagate_activation(const Tensor& r);

/// Splits relevance over a channel concatenation into (first, second).
std::pair<Tensor, Tensor> propagate_concat(const Tensor& r_concat, std::size_t channels_a);

/// Backward walk from an explicit output seed over a completed forward pass.
RelevanceMap propagate(const NetworkSpec& spec, const ParamStore& params, const ActivationCache& cache,
                       const Tensor& seed, const LrpConfig& config);

ConservationReport conservation_report(const RelevanceMap& maps);

struct Explanation {
  Tensor output;  // generator output for the explained input
  Tensor seed;
  RelevanceMap maps;
  ConservationReport conservation;
};

/// Forward pass, seeding per config.target, and full propagation.
Explanation explain(const NetworkSpec& spec, const ParamStore& params, const Tensor& input, const LrpConfig& config);

/// Writes all maps in the float-block container with a header naming them.
void save_relevance(const RelevanceMap& maps, const std::filesystem::path& path);

}  // namespace segx

#endif  // SEGX_LRP_HPP_
