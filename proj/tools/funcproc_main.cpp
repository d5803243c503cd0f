// Copyright 2026 The funcproc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// funcproc run <config> [--out-dir D] [--validate]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "funcproc/cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process-functional experiment runner"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run every task in a config file");
  std::string config;
  std::string out_dir;
  bool validate = false;
  run->add_option("config", config, "Config file")->required();
  run->add_option("--out-dir", out_dir, "Override output.dir");
  run->add_flag("--validate", validate, "Parse and validate only");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : funcproc::cli::kConfigError;
  }
  funcproc::cli::RunOptions opt;
  opt.validate_only = validate;
  if (!out_dir.empty()) opt.out_dir = out_dir;
  const auto res = funcproc::cli::run_config(config, opt);
  if (res.exit_code == 0) {
    if (!res.message.empty()) std::cout << res.message << '\n';
  } else {
    std::cerr << "funcproc: " << res.message << '\n';
  }
  return res.exit_code;
}
