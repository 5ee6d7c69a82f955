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

#include "segx/training.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>

#include "segx/checkpoint.hpp"
#include "segx/data.hpp"
#include "segx/kernels/kernels.hpp"
#include "segx/rng.hpp"

namespace segx {

std::string to_string(GeneratorOptimizer o) { return o == GeneratorOptimizer::sgd ? "sgd" : "adam"; }

GeneratorOptimizer parse_generator_optimizer(const std::string& name) {
  if (name == "sgd") return GeneratorOptimizer::sgd;
  if (name == "adam") return GeneratorOptimizer::adam;
  throw Error("unknown generator optimizer '" + name + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1) throw Error("batch_size must be >= 1, got " + std::to_string(batch_size));
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw Error("adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw Error("adam_beta2 must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw Error("adam_epsilon must be > 0");
  if (!(l1_weight >= 0.0)) throw Error("l1_weight must be >= 0");
  if (!(generator_sgd_rate > 0.0)) throw Error("generator_sgd_rate must be > 0");
  if (checkpoint_interval < 0) throw Error("checkpoint_interval must be >= 0");
  parse_profile(profile_name);
}

template <class T>
DiscriminatorLoss<T> discriminator_loss(const BasicTensor<T>& d_real, const BasicTensor<T>& d_fake) {
  if (d_real.shape() != d_fake.shape()) {
    throw ShapeError("discriminator_loss: real scores " + d_real.shape().str() + " vs fake scores " +
                     d_fake.shape().str());
  }
  const T clamp = static_cast<T>(kLogClamp);
  const T count = static_cast<T>(d_real.size());
  DiscriminatorLoss<T> out{0, BasicTensor<T>(d_real.shape()), BasicTensor<T>(d_fake.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    const T r = d_real[i];
    const T f = T(1) - d_fake[i];
    total -= std::log(static_cast<double>(std::max(r, clamp)));
    total -= std::log(static_cast<double>(std::max(f, clamp)));
    out.grad_real[i] = r >= clamp ? T(-1) / (r * count) : T(0);
    out.grad_fake[i] = f >= clamp ? T(1) / (f * count) : T(0);
  }
  out.value = static_cast<T>(total / static_cast<double>(count));
  return out;
}

template <class T>
GeneratorLoss<T> generator_loss(const BasicTensor<T>& d_fake, const BasicTensor<T>& fake_mask,
                                const BasicTensor<T>& true_mask, T l1_weight) {
  if (fake_mask.shape() != true_mask.shape()) {
    throw ShapeError("generator_loss: generated mask " + fake_mask.shape().str() + " vs true mask " +
                     true_mask.shape().str());
  }
  if (d_fake.shape().n != fake_mask.shape().n) {
    throw ShapeError("generator_loss: scores " + d_fake.shape().str() + " and masks " + fake_mask.shape().str() +
                     " have different batch sizes");
  }
  const T clamp = static_cast<T>(kLogClamp);
  GeneratorLoss<T> out;
  out.grad_d_fake = BasicTensor<T>(d_fake.shape());
  out.grad_fake = BasicTensor<T>(fake_mask.shape());

  const T nd = static_cast<T>(d_fake.size());
  double adv = 0.0;
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const T d = d_fake[i];
    adv -= std::log(static_cast<double>(std::max(d, clamp)));
    out.grad_d_fake[i] = d >= clamp ? T(-1) / (d * nd) : T(0);
  }
  const T nm = static_cast<T>(fake_mask.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < fake_mask.size(); ++i) {
    const T diff = fake_mask[i] - true_mask[i];
    l1 += std::abs(static_cast<double>(diff));
    const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
    out.grad_fake[i] = l1_weight * sign / nm;
  }
  out.adversarial = static_cast<T>(adv / static_cast<double>(nd));
  out.l1 = static_cast<T>(l1 / static_cast<double>(nm));
  out.value = static_cast<T>(adv / static_cast<double>(nd) + static_cast<double>(l1_weight) * l1 / static_cast<double>(nm));
  return out;
}

template DiscriminatorLoss<float> discriminator_loss<float>(const Tensor&, const Tensor&);
template DiscriminatorLoss<double> discriminator_loss<double>(const TensorD&, const TensorD&);
template GeneratorLoss<float> generator_loss<float>(const Tensor&, const Tensor&, const Tensor&, float);
template GeneratorLoss<double> generator_loss<double>(const TensorD&, const TensorD&, const TensorD&, double);

OptimizerState OptimizerState::zeros_like(const ParamStore& params) {
  OptimizerState s;
  for (const auto& l : params.layers()) {
    s.m.push_back({Tensor(l.weights.shape()), std::vector<float>(l.bias.size(), 0.0f)});
    s.v.push_back({Tensor(l.weights.shape()), std::vector<float>(l.bias.size(), 0.0f)});
  }
  return s;
}

void adam_step(ParamStore& params, const ParamStore& grads, OptimizerState& state, const TrainConfig& config) {
  if (grads.layer_count() != params.layer_count() || state.m.size() != params.layer_count() ||
      state.v.size() != params.layer_count()) {
    throw ShapeError("adam_step: parameter, gradient and moment layer counts differ");
  }
  for (std::size_t i = 0; i < params.layer_count(); ++i) {
    const LayerParams& g = grads.layers()[i];
    const LayerParams& p = params.layers()[i];
    if (g.weights.shape() != p.weights.shape() || g.bias.size() != p.bias.size() ||
        state.m[i].weights.shape() != p.weights.shape() || state.v[i].bias.size() != p.bias.size()) {
      throw ShapeError("adam_step: shapes disagree at " + to_string(params.role()) + " layer " +
                       std::to_string(i + 1));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoeffs c{
      static_cast<float>(config.learning_rate),
      static_cast<float>(config.adam_beta1),
      static_cast<float>(config.adam_beta2),
      static_cast<float>(config.adam_epsilon),
      static_cast<float>(1.0 - std::pow(config.adam_beta1, t)),
      static_cast<float>(1.0 - std::pow(config.adam_beta2, t)),
  };
  for (std::size_t i = 0; i < params.layer_count(); ++i) {
    LayerParams& p = params.layers()[i];
    const LayerParams& g = grads.layers()[i];
    const bool weights_ok = kernels::adam_update(p.weights.raw(), state.m[i].weights.raw(),
                                                 state.v[i].weights.raw(), g.weights.raw(), p.weights.size(), c);
    const bool bias_ok = kernels::adam_update(p.bias.data(), state.m[i].bias.data(), state.v[i].bias.data(),
                                              g.bias.data(), p.bias.size(), c);
    if (!weights_ok || !bias_ok) {
      throw Error("adam_step: non-finite gradient in " + to_string(params.role()) + " layer " +
                  std::to_string(i + 1) + (weights_ok ? " bias" : " weights"));
    }
  }
}

void sgd_step(ParamStore& params, const ParamStore& grads, double rate) {
  if (grads.layer_count() != params.layer_count()) {
    throw ShapeError("sgd_step: parameter and gradient layer counts differ");
  }
  const auto r = static_cast<float>(rate);
  const auto step = [r](std::span<float> p, std::span<const float> g) {
    if (p.size() != g.size()) return false;
    return kernels::sgd_update(p.data(), g.data(), p.size(), r);
  };
  for (std::size_t i = 0; i < params.layer_count(); ++i) {
    LayerParams& p = params.layers()[i];
    const LayerParams& g = grads.layers()[i];
    if (p.weights.shape() != g.weights.shape() || p.bias.size() != g.bias.size()) {
      throw ShapeError("sgd_step: shapes disagree at " + to_string(params.role()) + " layer " + std::to_string(i + 1));
    }
    const bool weights_ok = step(p.weights.data(), g.weights.data());
    const bool bias_ok = step(p.bias, g.bias);
    if (!weights_ok || !bias_ok) {
      throw Error("sgd_step: non-finite gradient in " + to_string(params.role()) + " layer " + std::to_string(i + 1) +
                  (weights_ok ? " bias" : " weights"));
    }
  }
}

namespace {

Tensor join_batch(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  if (b.shape().c != sa.c || b.shape().h != sa.h || b.shape().w != sa.w) {
    throw ShapeError("join_batch: " + sa.str() + " and " + b.shape().str() + " differ");
  }
  Tensor out = Tensor::uninitialized(Shape{sa.n + b.shape().n, sa.c, sa.h, sa.w});
  std::memcpy(out.raw(), a.raw(), a.size() * sizeof(float));
  std::memcpy(out.raw() + a.size(), b.raw(), b.size() * sizeof(float));
  return out;
}

std::pair<Tensor, Tensor> split_batch(const Tensor& t, std::size_t first) {
  const Shape& s = t.shape();
  Tensor a = Tensor::uninitialized(Shape{first, s.c, s.h, s.w});
  Tensor b = Tensor::uninitialized(Shape{s.n - first, s.c, s.h, s.w});
  std::memcpy(a.raw(), t.raw(), a.size() * sizeof(float));
  std::memcpy(b.raw(), t.raw() + a.size(), b.size() * sizeof(float));
  return {std::move(a), std::move(b)};
}

struct Seeds {
  std::uint64_t generator;
  std::uint64_t discriminator;
  std::uint64_t shuffle;
};

Seeds derive_seeds(std::uint64_t seed) {
  Rng root(seed);
  const std::uint64_t g = root.next_u64();
  const std::uint64_t d = root.next_u64();
  const std::uint64_t s = root.next_u64();
  return {g, d, s};
}

Tensor stack(const std::vector<SamplePair>& data, const std::vector<std::size_t>& idx, bool masks) {
  const Tensor& first = masks ? data[idx[0]].mask : data[idx[0]].image;
  const Shape s0 = first.shape();
  Tensor out(Shape{idx.size(), s0.c, s0.h, s0.w});
  const std::size_t per = s0.c * s0.plane();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Tensor& t = masks ? data[idx[b]].mask : data[idx[b]].image;
    std::memcpy(out.plane(b, 0), t.raw(), per * sizeof(float));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TrainState make_train_state(const TrainConfig& config) {
  const Seeds seeds = derive_seeds(config.seed);
  TrainState s;
  s.gspec = build_generator(config.profile_name);
  s.dspec = build_discriminator(config.profile_name);
  s.g = init_params(s.gspec, seeds.generator);
  s.d = init_params(s.dspec, seeds.discriminator);
  s.g_opt = OptimizerState::zeros_like(s.g);
  s.d_opt = OptimizerState::zeros_like(s.d);
  return s;
}

StepLoss train_step(TrainState& state, const Tensor& images, const Tensor& masks, const TrainConfig& config) {
  const ForwardResult gen = forward(state.gspec, state.g, images);
  const Tensor real_pair = concat_channels(images, masks);
  const Tensor fake_pair = concat_channels(images, gen.output);

  StepLoss out;

  // Discriminator update on (image, true mask) vs (image, generated mask),
  // both halves in one batch.
  {
    const std::size_t half = real_pair.shape().n;
    const ForwardResult d = forward(state.dspec, state.d, join_batch(real_pair, fake_pair));
    const auto [d_real, d_fake] = split_batch(d.output, half);
    const DiscriminatorLoss<float> loss = discriminator_loss(d_real, d_fake);
    if (!std::isfinite(loss.value)) throw DivergenceError("discriminator loss became non-finite");
    const NetworkGrads gd =
        backward(state.dspec, state.d, d.cache, join_batch(loss.grad_real, loss.grad_fake), {false, true});
    adam_step(state.d, gd.params, state.d_opt, config);
    out.d_loss = loss.value;
  }

  // Generator update through the refreshed discriminator plus the L1 term.
  const ForwardResult df2 = forward(state.dspec, state.d, fake_pair);
  const GeneratorLoss<float> gl = generator_loss(df2.output, gen.output, masks, static_cast<float>(config.l1_weight));
  if (!std::isfinite(gl.value)) throw DivergenceError("generator loss became non-finite");
  const NetworkGrads through_d = backward(state.dspec, state.d, df2.cache, gl.grad_d_fake, {true, false});
  Tensor grad_mask = split_channels(through_d.input, images.shape().c).second;
  for (std::size_t i = 0; i < grad_mask.size(); ++i) grad_mask[i] += gl.grad_fake[i];
  const NetworkGrads gg = backward(state.gspec, state.g, gen.cache, grad_mask, {false, true});
  if (config.generator_optimizer == GeneratorOptimizer::adam) {
    adam_step(state.g, gg.params, state.g_opt, config);
  } else {
    sgd_step(state.g, gg.params, config.generator_sgd_rate);
  }

  out.g_adv = gl.adversarial;
  out.g_l1 = gl.l1;
  return out;
}

TrainOutput train(const std::vector<SamplePair>& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (dataset.empty()) throw Error("training dataset is empty");
  TrainState state = make_train_state(config);
  const Shape want_img = state.gspec.input_shape(1);
  for (const auto& s : dataset) {
    if (s.image.shape() != want_img || s.mask.shape() != Shape{1, 1, want_img.h, want_img.w}) {
      throw Error("sample '" + s.id + "' has image " + s.image.shape().str() + " / mask " + s.mask.shape().str() +
                  ", profile " + config.profile_name + " needs " + want_img.str());
    }
  }

  const bool persist = !hooks.run_dir.empty();
  std::ofstream log;
  if (persist) {
    std::filesystem::create_directories(hooks.run_dir);
    log.open(hooks.run_dir / "loss.csv", std::ios::trunc);
    if (!log) throw Error("cannot write " + (hooks.run_dir / "loss.csv").string());
    log << "epoch,step,d_loss,g_adv,g_l1\n";
  }
  const auto write_checkpoints = [&] {
    save_checkpoint(state.gspec, state.g, hooks.run_dir / "gen.ckpt");
    save_checkpoint(state.dspec, state.d, hooks.run_dir / "disc.ckpt");
  };

  Rng shuffle_rng(derive_seeds(config.seed).shuffle);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  TrainOutput out;
  int global_step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    EpochLoss mean{epoch, 0, 0, 0};
    int steps_this_epoch = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      StepLoss step;
      try {
        step = train_step(state, stack(dataset, idx, false), stack(dataset, idx, true), config);
      } catch (const DivergenceError&) {
        throw;
      } catch (const ShapeError&) {
        throw;
      } catch (const Error& e) {
        throw DivergenceError(std::string("training diverged at epoch ") + std::to_string(epoch) + ": " + e.what());
      }
      ++global_step;
      ++steps_this_epoch;
      step.epoch = epoch;
      step.step = global_step;
      out.losses.discriminator_updates += 1;
      out.losses.generator_updates += 1;
      mean.d_loss += step.d_loss;
      mean.g_adv += step.g_adv;
      mean.g_l1 += step.g_l1;
      if (persist) {
        log << epoch << ',' << global_step << ',' << format_double(step.d_loss) << ',' << format_double(step.g_adv)
            << ',' << format_double(step.g_l1) << '\n';
      }
      out.losses.steps.push_back(step);
    }
    mean.d_loss /= steps_this_epoch;
    mean.g_adv /= steps_this_epoch;
    mean.g_l1 /= steps_this_epoch;
    out.losses.epochs.push_back(mean);
    if (persist) log.flush();
    if (hooks.on_epoch) hooks.on_epoch(mean);
    if (persist && config.checkpoint_interval > 0 && epoch % config.checkpoint_interval == 0 &&
        epoch != config.epochs) {
      write_checkpoints();
    }
  }
  if (persist) write_checkpoints();

  out.generator_spec = std::move(state.gspec);
  out.generator = std::move(state.g);
  out.discriminator_spec = std::move(state.dspec);
  out.discriminator = std::move(state.d);
  return out;
}

}  // namespace segx
