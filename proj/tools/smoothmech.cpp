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


#include <iostream>

#include "CLI11.hpp"
#include "smoothmech/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = smoothmech::cli;
  CLI::App app{"smoothmech: smoothness certificates and equilibrium checks for auctions"};
  std::string subcommand, config, out = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("subcommand", subcommand, "experiment to run")
      ->required()
      ->check(CLI::IsMember(cli::subcommands()));
  app.add_option("--config", config, "JSON experiment config")->required();
  app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitPass : cli::kExitError;
  }

  try {
    cli::RunOptions options;
    if (seed_opt->count() > 0) options.seed = seed;
    options.threads = threads;
    const auto report = cli::run_experiment(subcommand, cli::load_config(config), options);
    cli::write_report(report, subcommand, out);
    std::cout << subcommand << ": " << (report.pass ? "pass" : "FAIL") << " (" << out << "/"
              << subcommand << ".json)\n";
    return report.pass ? cli::kExitPass : cli::kExitCheckFailed;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return cli::kExitError;
}
