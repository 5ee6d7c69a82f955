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

#include "segx/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace segx {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_float_blocks(const std::filesystem::path& path, const std::string& header,
                        const std::vector<std::span<const float>>& blocks) {
  std::string prefix(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(prefix, kCheckpointVersion);
  put_u32(prefix, static_cast<std::uint32_t>(header.size()));
  prefix += header;

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp.string() + "' for writing");
    f.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
    std::string buf;
    for (const auto& block : blocks) {
      buf.resize(block.size() * 4);
      for (std::size_t i = 0; i < block.size(); ++i) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(block[i]);
        for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
      }
      f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!f) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

FloatBlockFile read_float_blocks(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw NotACheckpointError("'" + path.string() + "' is not a checkpoint (bad magic bytes)");
  }
  if (bytes.size() < 16) throw IntegrityError("'" + path.string() + "' is truncated inside the preamble");
  const std::uint32_t version = get_u32(p + 8);
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("'" + path.string() + "' has format version " + std::to_string(version) +
                               ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t header_len = get_u32(p + 12);
  if (bytes.size() < 16 + static_cast<std::size_t>(header_len)) {
    throw IntegrityError("'" + path.string() + "' is truncated inside the header");
  }
  FloatBlockFile out;
  out.header = bytes.substr(16, header_len);
  const std::size_t payload = bytes.size() - 16 - header_len;
  if (payload % 4 != 0) throw IntegrityError("'" + path.string() + "' has a partial float at the end");
  out.values.resize(payload / 4);
  const unsigned char* q = p + 16 + header_len;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::bit_cast<float>(get_u32(q + 4 * i));
  return out;
}

void expect_float_count(const FloatBlockFile& file, std::size_t expected, const std::filesystem::path& path) {
  if (file.values.size() < expected) {
    throw IntegrityError("'" + path.string() + "' is truncated: " + std::to_string(file.values.size()) +
                         " of " + std::to_string(expected) + " values present");
  }
  if (file.values.size() > expected) {
    throw IntegrityError("'" + path.string() + "' has " + std::to_string(file.values.size() - expected) +
                         " unexpected trailing values");
  }
}

std::string spec_to_header(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    const Shape ws = weight_shape(l);
    layers.push_back({
        {"index", l.index},
        {"kind", to_string(l.kind)},
        {"in_channels", l.in_channels},
        {"out_channels", l.out_channels},
        {"activation", to_string(l.activation.kind)},
        {"alpha", l.activation.alpha},
        {"skip_source", l.skip_source ? json(*l.skip_source) : json(nullptr)},
        {"kernel", {l.geometry.kh, l.geometry.kw}},
        {"stride", {l.geometry.sh, l.geometry.sw}},
        {"padding", {l.geometry.ph, l.geometry.pw}},
        {"weight_shape", {ws.n, ws.c, ws.h, ws.w}},
        {"bias_length", l.out_channels},
    });
  }
  const json header{
      {"format", "segxplain-network"},
      {"role", to_string(spec.role)},
      {"profile", spec.profile_name},
      {"in_channels", spec.in_channels},
      {"input_size", {spec.input_h, spec.input_w}},
      {"layers", layers},
  };
  return header.dump();
}

NetworkSpec spec_from_header(const std::string& header) {
  json h;
  try {
    h = json::parse(header);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  NetworkSpec spec;
  try {
    if (h.value("format", std::string()) != "segxplain-network") {
      throw InconsistentShapeError("header does not describe a network (format '" +
                                   h.value("format", std::string()) + "')");
    }
    spec.role = parse_role(h.at("role").get<std::string>());
    spec.profile_name = h.at("profile").get<std::string>();
    spec.in_channels = h.at("in_channels").get<std::size_t>();
    spec.input_h = h.at("input_size").at(0).get<std::size_t>();
    spec.input_w = h.at("input_size").at(1).get<std::size_t>();
    for (const auto& jl : h.at("layers")) {
      LayerSpec l;
      l.index = jl.at("index").get<int>();
      l.kind = parse_layer_kind(jl.at("kind").get<std::string>());
      l.in_channels = jl.at("in_channels").get<std::size_t>();
      l.out_channels = jl.at("out_channels").get<std::size_t>();
      l.activation.kind = parse_activation(jl.at("activation").get<std::string>());
      l.activation.alpha = jl.at("alpha").get<float>();
      if (!jl.at("skip_source").is_null()) l.skip_source = jl.at("skip_source").get<int>();
      l.geometry = {jl.at("kernel").at(0).get<std::size_t>(),  jl.at("kernel").at(1).get<std::size_t>(),
                    jl.at("stride").at(0).get<std::size_t>(),  jl.at("stride").at(1).get<std::size_t>(),
                    jl.at("padding").at(0).get<std::size_t>(), jl.at("padding").at(1).get<std::size_t>()};
      const auto& js = jl.at("weight_shape");
      const Shape declared{js.at(0).get<std::size_t>(), js.at(1).get<std::size_t>(), js.at(2).get<std::size_t>(),
                           js.at(3).get<std::size_t>()};
      if (declared != weight_shape(l) || jl.at("bias_length").get<std::size_t>() != l.out_channels) {
        throw InconsistentShapeError("layer " + std::to_string(l.index) + " declares weights " + declared.str() +
                                     " but its geometry implies " + weight_shape(l).str());
      }
      spec.layers.push_back(l);
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("checkpoint header is missing fields: ") + e.what());
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw InconsistentShapeError(std::string("checkpoint header: ") + e.what());
  }
  try {
    shape_chain(spec);
  } catch (const Error& e) {
    throw InconsistentShapeError(std::string("checkpoint architecture is inconsistent: ") + e.what());
  }
  return spec;
}

void save_checkpoint(const NetworkSpec& spec, const ParamStore& params, const std::filesystem::path& path) {
  params.check_against(spec);
  std::vector<std::span<const float>> blocks;
  for (const auto& l : params.layers()) {
    blocks.emplace_back(l.weights.data());
    blocks.emplace_back(l.bias);
  }
  write_float_blocks(path, spec_to_header(spec), blocks);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const FloatBlockFile file = read_float_blocks(path);
  NetworkSpec spec = spec_from_header(file.header);
  std::size_t expected = 0;
  for (const auto& l : spec.layers) expected += weight_shape(l).size() + l.out_channels;
  expect_float_count(file, expected, path);

  std::vector<LayerParams> layers;
  layers.reserve(spec.layers.size());
  auto it = file.values.begin();
  for (const auto& l : spec.layers) {
    const Shape ws = weight_shape(l);
    std::vector<float> w(it, it + static_cast<std::ptrdiff_t>(ws.size()));
    it += static_cast<std::ptrdiff_t>(ws.size());
    std::vector<float> b(it, it + static_cast<std::ptrdiff_t>(l.out_channels));
    it += static_cast<std::ptrdiff_t>(l.out_channels);
    layers.push_back({Tensor(ws, std::move(w)), std::move(b)});
  }
  ParamStore params(spec.role, std::move(layers));
  return {std::move(spec), std::move(params)};
}

}  // namespace segx
