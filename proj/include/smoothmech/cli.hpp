// Copyright 2026 The smoothmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SMOOTHMECH_CLI_HPP_
#define SMOOTHMECH_CLI_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace smoothmech::cli {

// Schema violation; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  int threads = 1;
};

struct Report {
  bool pass = false;
  nlohmann::ordered_json result;
  std::string csv;
};

const std::vector<std::string>& subcommands();

// Validates the whole config, then runs every entry of its "runs" array.
// Module errors (caps, domain violations) propagate unchanged.
Report run_experiment(const std::string& subcommand, const nlohmann::json& config,
                      const RunOptions& options = {});

nlohmann::json load_config(const std::string& path);

// Writes <out>/<subcommand>.json and <subcommand>.csv.
void write_report(const Report& report, const std::string& subcommand, const std::string& out);

// "%.12g"; inf and nan spelled out.
std::string format_number(double x);

}  // namespace smoothmech::cli

#endif  // SMOOTHMECH_CLI_HPP_
