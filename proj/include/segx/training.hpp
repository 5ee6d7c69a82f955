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

#ifndef SEGX_TRAINING_HPP_
#define SEGX_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "segx/network.hpp"

namespace segx {

struct SamplePair;

enum class GeneratorOptimizer { sgd, adam };

std::string to_string(GeneratorOptimizer o);
/// Throws segx::Error for anything but "sgd" / "adam".
GeneratorOptimizer parse_generator_optimizer(const std::string& name);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 4;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double l1_weight = 100.0;
  /// The discriminator always uses Adam with the settings above; the
  /// generator uses plain gradient descent at generator_sgd_rate unless
  /// switched to Adam.
  GeneratorOptimizer generator_optimizer = GeneratorOptimizer::sgd;
  double generator_sgd_rate = 2e-3;
  std::uint64_t seed = 1;
  std::string profile_name = "desk-32";
  int checkpoint_interval = 50;

  /// Throws segx::Error describing the first violated constraint.
  void validate() const;
};

/// Lower clamp applied to every log argument in the adversarial losses.
inline constexpr double kLogClamp = 1e-7;

template <class T>
struct DiscriminatorLoss {
  T value = 0;
  BasicTensor<T> grad_real;  // dL/d d_real
  BasicTensor<T> grad_fake;  // dL/d d_fake
};

/// mean(-[log d_real + log(1 - d_fake)]) over batch and patch grid.
template <class T>
DiscriminatorLoss<T> discriminator_loss(const BasicTensor<T>& d_real, const BasicTensor<T>& d_fake);

template <class T>
struct GeneratorLoss {
  T value = 0;  // adversarial + l1_weight * l1
  T adversarial = 0;
  T l1 = 0;
  BasicTensor<T> grad_d_fake;  // dL/d d_fake
  BasicTensor<T> grad_fake;    // dL/d fake_mask (L1 part only)
};

/// mean(-log d_fake) + lambda * mean|fake - truth|.
template <class T>
GeneratorLoss<T> generator_loss(const BasicTensor<T>& d_fake, const BasicTensor<T>& fake_mask,
                                const BasicTensor<T>& true_mask, T l1_weight);

struct OptimizerState {
  std::vector<LayerParams> m;
  std::vector<LayerParams> v;
  std::int64_t step = 0;

  static OptimizerState zeros_like(const ParamStore& params);
};

/// One Adam step with bias correction. Throws segx::Error naming the first
/// layer with a non-finite gradient. Entries with a non-finite gradient are
/// never written, but layers before the offending one have already been
/// stepped, so the state should be discarded after the error.
void adam_step(ParamStore& params, const ParamStore& grads, OptimizerState& state, const TrainConfig& config);

/// params -= rate * grads. Same non-finite contract as adam_step.
void sgd_step(ParamStore& params, const ParamStore& grads, double rate);

struct StepLoss {
  int epoch = 0;
  int step = 0;  // global, 1-based
  double d_loss = 0;
  double g_adv = 0;
  double g_l1 = 0;
};

struct EpochLoss {
  int epoch = 0;
  double d_loss = 0;
  double g_adv = 0;
  double g_l1 = 0;
};

struct LossReport {
  std::vector<StepLoss> steps;
  std::vector<EpochLoss> epochs;
  std::int64_t discriminator_updates = 0;
  std::int64_t generator_updates = 0;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

struct TrainOutput {
  NetworkSpec generator_spec;
  ParamStore generator;
  NetworkSpec discriminator_spec;
  ParamStore discriminator;
  LossReport losses;
};

struct TrainHooks {
  /// Directory receiving gen.ckpt, disc.ckpt and loss.csv; empty = in-memory only.
  std::filesystem::path run_dir;
  /// Called after every epoch (for progress output).
  std::function<void(const EpochLoss&)> on_epoch;
};

/// Alternating adversarial training, discriminator first within each batch.
/// Deterministic for a fixed (dataset, config). On a non-finite loss throws
/// DivergenceError; checkpoints already on disk are left untouched.
TrainOutput train(const std::vector<SamplePair>& dataset, const TrainConfig& config, const TrainHooks& hooks = {});

/// Runs one training step pair on `batch_images`/`batch_masks`, updating both
/// networks in place. Exposed for tests of the per-batch contract.
struct TrainState {
  NetworkSpec gspec;
  NetworkSpec dspec;
  ParamStore g;
  ParamStore d;
  OptimizerState g_opt;
  OptimizerState d_opt;
};

TrainState make_train_state(const TrainConfig& config);
StepLoss train_step(TrainState& state, const Tensor& images, const Tensor& masks, const TrainConfig& config);

}  // namespace segx

#endif  // SEGX_TRAINING_HPP_
