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

#include "segx/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "segx/checkpoint.hpp"
#include "segx/data.hpp"
#include "segx/metrics.hpp"

namespace segx::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw UsageError(key + ": '" + text + "' is not a valid integer");
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw UsageError(key + ": '" + text + "' is not a finite number");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError(key + ": '" + text + "' is not a boolean (true/false)");
}

std::string char_fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"epochs", [](RunConfig& c, const auto& k, const auto& v) { c.train.epochs = parse_integer<int>(k, v); }},
      {"batch_size",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.batch_size = parse_integer<int>(k, v); }},
      {"learning_rate", [](RunConfig& c, const auto& k, const auto& v) { c.train.learning_rate = parse_real(k, v); }},
      {"adam_beta1", [](RunConfig& c, const auto& k, const auto& v) { c.train.adam_beta1 = parse_real(k, v); }},
      {"adam_beta2", [](RunConfig& c, const auto& k, const auto& v) { c.train.adam_beta2 = parse_real(k, v); }},
      {"adam_epsilon", [](RunConfig& c, const auto& k, const auto& v) { c.train.adam_epsilon = parse_real(k, v); }},
      {"l1_weight", [](RunConfig& c, const auto& k, const auto& v) { c.train.l1_weight = parse_real(k, v); }},
      {"generator_optimizer",
       [](RunConfig& c, const auto& k, const auto& v) {
         try {
           c.train.generator_optimizer = parse_generator_optimizer(v);
         } catch (const Error& e) {
           throw UsageError(k + ": " + e.what());
         }
       }},
      {"generator_sgd_rate",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.generator_sgd_rate = parse_real(k, v); }},
      {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.train.seed = parse_integer<std::uint64_t>(k, v); }},
      {"profile",
       [](RunConfig& c, const auto& k, const auto& v) {
         try {
           c.train.profile_name = to_string(parse_profile(v));
         } catch (const Error& e) {
           throw UsageError(k + ": " + e.what());
         }
       }},
      {"checkpoint_interval",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.checkpoint_interval = parse_integer<int>(k, v); }},
      {"lrp_epsilon",
       [](RunConfig& c, const auto& k, const auto& v) {
         const double e = parse_real(k, v);
         if (e < 0) throw UsageError(k + " must be >= 0");
         c.lrp.epsilon = e;
       }},
      {"lrp_include_bias",
       [](RunConfig& c, const auto& k, const auto& v) { c.lrp.include_bias_in_denominator = parse_bool(k, v); }},
      {"lrp_target", [](RunConfig& c, const auto&, const auto& v) { c.lrp.target = parse_target(v); }},
      {"threshold",
       [](RunConfig& c, const auto& k, const auto& v) {
         const double t = parse_real(k, v);
         if (!(t > -1.0 && t < 1.0)) throw UsageError(k + " must lie in (-1, 1)");
         c.threshold = static_cast<float>(t);
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, fn] : setters()) {
    if (name == key) {
      fn(config, key, value);
      return;
    }
  }
  throw UsageError("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty() || value.empty()) throw UsageError(where + ": expected 'key = value'");
    if (!out.emplace(key, value).second) throw UsageError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

RelevanceTarget parse_target(const std::string& text) {
  if (text == "full") return RelevanceTarget::full_output();
  if (text == "mask") return RelevanceTarget::mask_region(0.0f);
  if (text.rfind("mask:", 0) == 0) {
    const double t = parse_real("target", text.substr(5));
    if (!(t > -1.0 && t < 1.0)) throw UsageError("target: mask threshold must lie in (-1, 1)");
    return RelevanceTarget::mask_region(static_cast<float>(t));
  }
  if (text.rfind("pixel:", 0) == 0) {
    std::vector<std::size_t> v;
    std::string rest = text.substr(6);
    std::size_t pos = 0;
    while (true) {
      const auto comma = rest.find(',', pos);
      v.push_back(parse_integer<std::size_t>("target", rest.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (v.size() != 3) throw UsageError("target: pixel needs three coordinates c,y,x");
    return RelevanceTarget::single_neuron(v[0], v[1], v[2]);
  }
  throw UsageError("target: '" + text + "' is not one of pixel:c,y,x | mask[:threshold] | full");
}

std::string format_target(const RelevanceTarget& target) {
  switch (target.mode) {
    case RelevanceTarget::Mode::single_neuron:
      return "pixel:" + std::to_string(target.channel) + "," + std::to_string(target.y) + "," +
             std::to_string(target.x);
    case RelevanceTarget::Mode::mask_region:
      return "mask:" + char_fmt("%g", target.threshold);
    case RelevanceTarget::Mode::full_output:
      return "full";
  }
  return "full";
}

namespace {

struct Session {
  std::ostream& out;
  std::ostream& err;
  std::optional<std::string> config_path;
  std::map<std::string, std::string> flags;  // settings given on the command line

  RunConfig resolve() const {
    RunConfig c;
    if (config_path) {
      for (const auto& [k, v] : read_config_file(*config_path)) apply_setting(c, k, v);
    }
    for (const auto& [k, v] : flags) apply_setting(c, k, v);
    return c;
  }
};

void add_setting(CLI::App* app, Session& s, const std::string& flag, const std::string& key,
                 const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&s, key](const std::string& v) { s.flags[key] = v; }, help);
}

std::filesystem::path generator_path(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? p / "gen.ckpt" : p;
}

Checkpoint load_generator(const std::filesystem::path& path, const RunConfig& cfg, bool profile_given) {
  Checkpoint ck = load_checkpoint(generator_path(path));
  if (ck.spec.role != NetworkRole::generator) {
    throw UsageError("'" + path.string() + "' is a " + to_string(ck.spec.role) + " checkpoint, need a generator");
  }
  if (profile_given && ck.spec.profile_name != cfg.train.profile_name) {
    throw UsageError("checkpoint profile " + ck.spec.profile_name + " differs from --profile " +
                     cfg.train.profile_name);
  }
  return ck;
}

std::string id_from_image(const std::filesystem::path& image) {
  std::string stem = image.stem().string();
  const std::string suffix = "_image";
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
    stem.resize(stem.size() - suffix.size());
  }
  return stem;
}

Tensor load_input(const std::filesystem::path& path, const NetworkSpec& spec) {
  const Tensor img = load_image(path);
  const Shape want = spec.input_shape(1);
  if (img.shape() != want) {
    throw UsageError("image '" + path.string() + "' is " + img.shape().str() + ", profile " + spec.profile_name +
                     " expects " + want.str());
  }
  return img;
}

Tensor predict(const Checkpoint& ck, const Tensor& image, float threshold) {
  return binarize(forward(ck.spec, ck.params, image).output, threshold);
}

void create_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
  }
}

// ---- gen-data ------------------------------------------------------------

struct GenDataArgs {
  std::string kind;
  std::size_t count = 80;
  std::optional<std::size_t> size;
  std::string out;
};

void cmd_gen_data(const Session& s, const GenDataArgs& a) {
  const RunConfig cfg = s.resolve();
  SyntheticKind kind;
  try {
    kind = parse_synthetic_kind(a.kind);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::size_t profile_size = build_generator(cfg.train.profile_name).input_h;
  const std::size_t size = a.size.value_or(profile_size);
  if (size != 32 && size != 256) throw UsageError("--size must match a profile input size (32 or 256)");
  if (a.count < 1) throw UsageError("--count must be >= 1");
  const SyntheticManifests m = gen_synthetic(kind, a.count, size, cfg.train.seed, a.out);
  s.out << "train manifest: " << m.train.string() << " (" << m.train_count << " samples)\n";
  s.out << "test manifest: " << m.test.string() << " (" << m.test_count << " samples)\n";
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string run_dir;
};

void cmd_train(const Session& s, const TrainArgs& a) {
  const RunConfig cfg = s.resolve();
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::vector<SamplePair> data = load_dataset(read_manifest(a.manifest));
  const Shape want = build_generator(cfg.train.profile_name).input_shape(1);
  for (const auto& p : data) {
    if (p.image.shape() != want) {
      throw UsageError("sample '" + p.id + "' is " + p.image.shape().str() + ", profile " + cfg.train.profile_name +
                       " expects " + want.str());
    }
  }
  TrainHooks hooks;
  hooks.run_dir = a.run_dir;
  const int every = cfg.train.checkpoint_interval;
  hooks.on_epoch = [&](const EpochLoss& e) {
    if (e.epoch % every == 0 || e.epoch == cfg.train.epochs) {
      s.out << "epoch " << e.epoch << "/" << cfg.train.epochs << " d_loss=" << char_fmt("%.6f", e.d_loss)
            << " g_adv=" << char_fmt("%.6f", e.g_adv) << " g_l1=" << char_fmt("%.6f", e.g_l1) << "\n"
            << std::flush;
    }
  };
  const TrainOutput result = train(data, cfg.train, hooks);
  const EpochLoss& last = result.losses.epochs.back();
  s.out << "final epoch=" << last.epoch << " d_loss=" << char_fmt("%.6f", last.d_loss)
        << " g_adv=" << char_fmt("%.6f", last.g_adv) << " g_l1=" << char_fmt("%.6f", last.g_l1) << "\n";
  s.out << "wrote " << (std::filesystem::path(a.run_dir) / "gen.ckpt").string() << ", "
        << (std::filesystem::path(a.run_dir) / "disc.ckpt").string() << ", "
        << (std::filesystem::path(a.run_dir) / "loss.csv").string() << "\n";
}

// ---- infer ---------------------------------------------------------------

struct InferArgs {
  std::string checkpoint;
  std::string image;
  std::string manifest;
  std::string out;
};

void cmd_infer(const Session& s, const InferArgs& a) {
  const RunConfig cfg = s.resolve();
  const Checkpoint ck = load_generator(a.checkpoint, cfg, s.flags.count("profile") > 0);
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;
  if (!a.image.empty()) {
    inputs.emplace_back(id_from_image(a.image), a.image);
  } else {
    const DatasetManifest m = read_manifest(a.manifest);
    for (const auto& e : m.entries) inputs.emplace_back(e.id, m.root / e.image);
  }
  create_dir(a.out);
  for (const auto& [id, path] : inputs) {
    const Tensor mask = predict(ck, load_input(path, ck.spec), cfg.threshold);
    save_image(mask, std::filesystem::path(a.out) / (id + "_mask.png"));
  }
  s.out << "wrote " << inputs.size() << " mask" << (inputs.size() == 1 ? "" : "s") << " to " << a.out << "\n";
}

// ---- explain -------------------------------------------------------------

struct ExplainArgs {
  std::string checkpoint;
  std::string image;
  std::string out;
  bool all_layers = false;
  bool raw = false;
};

std::string fmt_sum(double v) { return char_fmt("%.9g", v); }

void print_conservation(std::ostream& os, const ConservationReport& r) {
  os << "conservation layer=input sum=" << fmt_sum(r.layer_sums[0]) << "\n";
  for (std::size_t l = 0; l < r.leakage.size(); ++l) {
    os << "conservation layer=L" << (l + 1) << " sum=" << fmt_sum(r.layer_sums[l + 1])
       << " consumed_input_sum=" << fmt_sum(r.input_sums[l]) << " leakage=" << char_fmt("%.3e", r.leakage[l])
       << "\n";
  }
  os << "conservation end_to_end_leakage=" << char_fmt("%.3e", r.end_to_end_leakage)
     << " max_leakage=" << char_fmt("%.3e", r.max_leakage()) << "\n";
}

void cmd_explain(const Session& s, const ExplainArgs& a) {
  const RunConfig cfg = s.resolve();
  const Checkpoint ck = load_generator(a.checkpoint, cfg, s.flags.count("profile") > 0);
  const Tensor input = load_input(a.image, ck.spec);
  const Explanation e = explain(ck.spec, ck.params, input, cfg.lrp);
  bool finite = e.maps.input.all_finite();
  for (const auto& m : e.maps.layers) finite = finite && m.all_finite();
  if (!finite) throw Error("relevance maps contain non-finite values");
  create_dir(a.out);
  const std::string id = id_from_image(a.image);
  const std::filesystem::path dir(a.out);
  render_heatmap(e.maps.input, dir / (id + "_lrp_input.png"));
  std::size_t written = 1;
  if (a.all_layers) {
    for (std::size_t l = 0; l < e.maps.layers.size(); ++l) {
      render_heatmap(e.maps.layers[l], dir / (id + "_lrp_L" + std::to_string(l + 1) + ".png"));
      ++written;
    }
  }
  if (a.raw) save_relevance(e.maps, dir / (id + "_relevance.bin"));
  s.out << "target=" << format_target(cfg.lrp.target) << " epsilon=" << char_fmt("%g", cfg.lrp.epsilon)
        << " include_bias=" << (cfg.lrp.include_bias_in_denominator ? "true" : "false") << "\n";
  print_conservation(s.out, e.conservation);
  s.out << "wrote " << written << " heatmap" << (written == 1 ? "" : "s") << (a.raw ? " and raw maps" : "")
        << " to " << a.out << "\n";
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string manifest;
  std::string checkpoint;
  std::string pred_dir;
  std::string out;
};

void cmd_eval(const Session& s, const EvalArgs& a) {
  const RunConfig cfg = s.resolve();
  const DatasetManifest m = read_manifest(a.manifest);
  std::optional<Checkpoint> ck;
  if (!a.checkpoint.empty()) ck = load_generator(a.checkpoint, cfg, s.flags.count("profile") > 0);
  std::vector<ImageMetrics> per_image;
  for (const auto& e : m.entries) {
    const Tensor truth = binarize(load_image(m.root / e.mask), 0.0f);
    Tensor pred;
    if (ck) {
      pred = predict(*ck, load_input(m.root / e.image, ck->spec), cfg.threshold);
    } else {
      pred = binarize(load_image(std::filesystem::path(a.pred_dir) / (e.id + "_mask.png")), cfg.threshold);
    }
    if (pred.shape() != truth.shape()) {
      throw Error("prediction for '" + e.id + "' is " + pred.shape().str() + ", truth is " + truth.shape().str());
    }
    per_image.push_back(metrics(confusion(pred, truth), e.id));
  }
  const MetricsReport report = aggregate(std::move(per_image), cfg.threshold);
  std::filesystem::path out_dir = a.out;
  if (out_dir.empty()) {
    out_dir = ck ? generator_path(a.checkpoint).parent_path() : std::filesystem::path(a.pred_dir);
    if (out_dir.empty()) out_dir = ".";
  }
  create_dir(out_dir);
  write_report(report, out_dir / "report.txt");
  s.out << format_aggregate_line(report) << "\n";
}

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session s{out, err, std::nullopt, {}};
  CLI::App app{"segx: GAN mask segmentation with layer-wise relevance explanations", "segx"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option_function<std::string>(
      "--config", [&s](const std::string& v) { s.config_path = v; }, "Flat key = value configuration file");
  add_setting(&app, s, "--seed", "seed", "Random seed (u64)");
  add_setting(&app, s, "--profile", "profile", "canonical-256 | desk-32");

  GenDataArgs gd;
  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic image/mask dataset with manifests");
  gen->add_option("--kind", gd.kind, "polyp | instrument")->required();
  gen->add_option("--count", gd.count, "Number of image/mask pairs");
  gen->add_option("--size", gd.size, "Image side length (32 or 256); defaults to the profile's");
  gen->add_option("--out", gd.out, "Output directory")->required();

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "Train generator and discriminator");
  tr->add_option("--manifest", ta.manifest, "Training manifest")->required();
  tr->add_option("--run-dir", ta.run_dir, "Run directory for gen.ckpt, disc.ckpt, loss.csv")->required();
  add_setting(tr, s, "--epochs", "epochs", "Epochs (>= 1)");
  add_setting(tr, s, "--batch-size", "batch_size", "Mini-batch size");
  add_setting(tr, s, "--learning-rate", "learning_rate", "Adam learning rate (discriminator; generator when it uses Adam)");
  add_setting(tr, s, "--adam-beta1", "adam_beta1", "Adam beta1");
  add_setting(tr, s, "--adam-beta2", "adam_beta2", "Adam beta2");
  add_setting(tr, s, "--adam-epsilon", "adam_epsilon", "Adam epsilon");
  add_setting(tr, s, "--l1-weight", "l1_weight", "Weight of the L1 mask term");
  add_setting(tr, s, "--generator-optimizer", "generator_optimizer", "sgd | adam");
  add_setting(tr, s, "--generator-sgd-rate", "generator_sgd_rate", "Generator gradient-descent step size");
  add_setting(tr, s, "--checkpoint-interval", "checkpoint_interval", "Epochs between checkpoints");

  InferArgs ia;
  CLI::App* inf = app.add_subcommand("infer", "Predict binary masks");
  inf->add_option("--checkpoint", ia.checkpoint, "Generator checkpoint or run directory")->required();
  auto* inf_img = inf->add_option("--image", ia.image, "Single input image");
  auto* inf_man = inf->add_option("--manifest", ia.manifest, "Manifest of input images");
  inf_img->excludes(inf_man);
  inf->add_option("--out", ia.out, "Output directory")->required();
  add_setting(inf, s, "--threshold", "threshold", "Foreground threshold on the tanh output");

  ExplainArgs ea;
  CLI::App* ex = app.add_subcommand("explain", "Relevance maps for one image");
  ex->add_option("--checkpoint", ea.checkpoint, "Generator checkpoint or run directory")->required();
  ex->add_option("--image", ea.image, "Input image")->required();
  ex->add_option("--out", ea.out, "Output directory")->required();
  add_setting(ex, s, "--target", "lrp_target", "pixel:c,y,x | mask[:threshold] | full");
  add_setting(ex, s, "--epsilon", "lrp_epsilon", "Stabilizer added to denominators");
  add_setting(ex, s, "--include-bias", "lrp_include_bias", "Include biases in denominators (true/false)");
  ex->add_flag("--all-layers", ea.all_layers, "Also render every generator layer");
  ex->add_flag("--raw", ea.raw, "Also write the raw relevance tensors");

  EvalArgs va;
  CLI::App* ev = app.add_subcommand("eval", "Metrics report over a manifest");
  ev->add_option("--manifest", va.manifest, "Manifest with ground-truth masks")->required();
  auto* ev_ck = ev->add_option("--checkpoint", va.checkpoint, "Generator checkpoint or run directory");
  auto* ev_pd = ev->add_option("--pred-dir", va.pred_dir, "Directory of precomputed <id>_mask.png predictions");
  ev_ck->excludes(ev_pd);
  ev->add_option("--out", va.out, "Directory for report.txt (default: the run or prediction directory)");
  add_setting(ev, s, "--threshold", "threshold", "Foreground threshold");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      cmd_gen_data(s, gd);
    } else if (tr->parsed()) {
      cmd_train(s, ta);
    } else if (inf->parsed()) {
      if (ia.image.empty() && ia.manifest.empty()) throw UsageError("infer needs --image or --manifest");
      cmd_infer(s, ia);
    } else if (ex->parsed()) {
      cmd_explain(s, ea);
    } else if (ev->parsed()) {
      if (va.checkpoint.empty() && va.pred_dir.empty()) throw UsageError("eval needs --checkpoint or --pred-dir");
      cmd_eval(s, va);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace segx::cli
