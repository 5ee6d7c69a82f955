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

#ifndef SEGX_CLI_HPP_
#define SEGX_CLI_HPP_

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "segx/lrp.hpp"
#include "segx/training.hpp"

namespace segx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, bad config keys or values, failed validation.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Everything a subcommand can be configured with. Keys in a config file and
/// long flags share names ("learning_rate" / --learning-rate).
struct RunConfig {
  TrainConfig train;
  LrpConfig lrp;
  float threshold = 0.0f;
};

/// Settable keys, in the order they are documented.
const std::vector<std::string>& config_keys();

/// Applies one key = value setting; throws UsageError for unknown keys or
/// malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses a flat `key = value` file. Blank lines and lines starting with '#'
/// are ignored. Throws UsageError on syntax errors and duplicate keys.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// "pixel:c,y,x", "mask", "mask:<threshold>" or "full".
RelevanceTarget parse_target(const std::string& text);
std::string format_target(const RelevanceTarget& target);

/// Keeps large per-step buffers in the heap instead of mapping and unmapping
/// them on every allocation. Process-wide; call once before `run`.
void tune_allocator();

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segx::cli

#endif  // SEGX_CLI_HPP_
