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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "smoothmech/cli.hpp"

using namespace smoothmech;
using nlohmann::json;

namespace {

const std::string kConfigs = SMOOTHMECH_CONFIG_DIR;

json first_price_run(double lambda) {
  json run = json::parse(R"({
    "label": "fp",
    "mechanism": {"kind": "single_item", "format": "first_price", "players": 2,
                  "grid": {"cap": 1, "points": 6}},
    "profiles": {"generator": "additive", "count": 3},
    "lambda": 0, "mu": 1
  })");
  run["lambda"] = lambda;
  return run;
}

json config_with(json run, std::optional<std::uint64_t> seed = 5) {
  json c{{"runs", json::array({run})}};
  if (seed) c["seed"] = *seed;
  return c;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int tool(const std::string& args) {
  const std::string cmd = std::string(SMOOTHMECH_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("smoothmech_cli_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("numbers print with 12 significant digits") {
  CHECK(cli::format_number(1.0 - std::exp(-1.0)) == "0.632120558829");
  CHECK(cli::format_number(0.5) == "0.5");
  CHECK(cli::format_number(-0.0) == "0");
  CHECK(cli::format_number(1.0 / 0.0) == "inf");
}

TEST_CASE("schema errors name the field") {
  json run = first_price_run(0.5);
  run["lamda"] = 0.5;
  try {
    cli::run_experiment("certify", config_with(run));
    FAIL("unknown field accepted");
  } catch (const cli::ConfigError& e) {
    CHECK(std::string(e.what()).find("runs[0].lamda") != std::string::npos);
  }

  json bad_grid = first_price_run(0.5);
  bad_grid["mechanism"]["grid"]["step"] = 0.1;
  CHECK_THROWS_AS(cli::run_experiment("certify", config_with(bad_grid)), cli::ConfigError);

  json bad_format = first_price_run(0.5);
  bad_format["mechanism"]["format"] = "dutch";
  CHECK_THROWS_AS(cli::run_experiment("certify", config_with(bad_format)), cli::ConfigError);

  json top = config_with(first_price_run(0.5));
  top["output"] = "x";
  CHECK_THROWS_AS(cli::run_experiment("certify", top), cli::ConfigError);
  CHECK_THROWS_AS(cli::run_experiment("auction", config_with(first_price_run(0.5))),
                  cli::ConfigError);
}

TEST_CASE("generators need a seed, explicit profiles do not") {
  CHECK_THROWS_AS(cli::run_experiment("certify", config_with(first_price_run(0.5), std::nullopt)),
                  cli::ConfigError);
  cli::RunOptions o;
  o.seed = 11;
  CHECK(cli::run_experiment("certify", config_with(first_price_run(0.5), std::nullopt), o).pass);

  json run = first_price_run(0.5);
  run["profiles"] = json::parse(R"({"explicit": [[1.0, 0.6], [0.3, 0.9]]})");
  CHECK(cli::run_experiment("certify", config_with(run, std::nullopt)).pass);
  run["profiles"] = json::parse(R"({"explicit": [[1.0]]})");
  CHECK_THROWS_AS(cli::run_experiment("certify", config_with(run, std::nullopt)), cli::ConfigError);
}

TEST_CASE("same config and seed give identical CSV") {
  const auto config = cli::load_config(kConfigs + "/single_item_certify.json");
  const auto a = cli::run_experiment("certify", config);
  const auto b = cli::run_experiment("certify", config);
  CHECK(a.csv == b.csv);
  CHECK(a.result.dump() == b.result.dump());

  cli::RunOptions other;
  other.seed = 99;
  const auto c = cli::run_experiment("certify", config, other);
  CHECK(c.csv != a.csv);

  const auto v1 = cli::run_experiment("valuations", cli::load_config(kConfigs + "/valuations.json"));
  const auto v2 = cli::run_experiment("valuations", cli::load_config(kConfigs + "/valuations.json"));
  CHECK(v1.csv == v2.csv);
}

TEST_CASE("tool exit codes and artifacts") {
  const auto out = scratch("exit");
  CHECK(tool("certify --config " + kConfigs + "/single_item_certify.json --out " + out.string()) ==
        cli::kExitPass);
  const std::string csv = read(out / "certify.csv");
  CHECK(csv.rfind("label,check,index,value,relation,threshold,pass\n", 0) == 0);
  CHECK(csv.find("first_price,certificate") != std::string::npos);
  CHECK(json::parse(read(out / "certify.json"))["pass"] == true);

  // Rerunning the binary reproduces the CSV byte for byte.
  const auto again = scratch("again");
  CHECK(tool("certify --config " + kConfigs + "/single_item_certify.json --out " + again.string()) ==
        cli::kExitPass);
  CHECK(read(again / "certify.csv") == csv);

  CHECK(tool("certify --config " + kConfigs + "/first_price_fail.json --out " + out.string()) ==
        cli::kExitCheckFailed);
  const auto failed = json::parse(read(out / "certify.json"));
  CHECK(failed["pass"] == false);
  CHECK(failed["runs"][0]["certificate"]["worst_profile"].size() == 2);

  const auto broken = out / "broken.json";
  std::ofstream(broken) << "{\"runs\": [";
  CHECK(tool("certify --config " + broken.string() + " --out " + out.string()) == cli::kExitError);
  CHECK(tool("certify --config " + (out / "missing.json").string()) == cli::kExitError);
  CHECK(tool("certify") == cli::kExitError);
  CHECK(tool("explode --config " + kConfigs + "/fit.json") == cli::kExitError);
  // Cap violations surface as errors, not failed checks.
  std::ofstream(out / "huge.json") << R"({"runs": [{"label": "x", "mechanism": {"kind": "sequential",
    "components": [{"kind": "single_item", "format": "first_price", "grid": {"points": 11}},
                   {"kind": "single_item", "format": "first_price", "grid": {"points": 11}},
                   {"kind": "single_item", "format": "first_price", "grid": {"points": 11}}]},
    "profiles": {"explicit": []}, "lambda": 0.5, "mu": 1}]})";
  CHECK(tool("certify --config " + (out / "huge.json").string() + " --out " + out.string()) ==
        cli::kExitError);
}
