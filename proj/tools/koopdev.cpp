/*
 Copyright 2026 The koopdev Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "commands.hpp"
#include "koopdev/io.hpp"

namespace {

using namespace koopdev;
using cli::ExitCode;

struct Shared {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::vector<std::string> overrides;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--seed", s.seed, "random seed");
  app->add_option("--out", s.out, "output directory");
  app->add_option("--jobs", s.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--set", s.overrides, "config override key=value (repeatable)");
}

RunConfig resolve(const Shared& s, const std::vector<std::pair<std::string, std::string>>& flags) {
  RunConfig config = s.config_path.empty() ? RunConfig{} : load_config(s.config_path);
  for (const auto& item : s.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + item + "'");
    config.set(trim(item.substr(0, eq)), item.substr(eq + 1));
  }
  for (const auto& [key, value] : flags) config.set(key, value);
  if (s.seed) config.seed = *s.seed;
  if (s.out) config.out = *s.out;
  if (s.jobs) config.jobs = *s.jobs;
  config.validate();
  return config;
}

std::string default_path(const RunConfig& config, const std::optional<std::string>& given,
                         const char* name) {
  return given ? *given : (std::filesystem::path(config.out) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-based optimal control with optimality-deviation analysis"};
  app.set_version_flag("--version", std::string(kToolName) + ' ' + kToolVersion);
  app.require_subcommand(1);

  Shared shared;
  std::vector<std::pair<std::string, std::string>> flags;
  const auto flag = [&flags](CLI::App* sub, const std::string& name, const std::string& key,
                             const std::string& help) {
    sub->add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };

  std::optional<std::string> data_path, model_path;
  std::string skip;

  auto* gen = app.add_subcommand("gen-data", "simulate the plant under random excitation");
  add_shared(gen, shared);
  flag(gen, "--n-traj", "n_traj", "number of trajectories");
  flag(gen, "--t-len", "t_len", "trajectory length");
  flag(gen, "--step", "data_step", "sampling step");

  auto* ident = app.add_subcommand("identify", "fit the lifted bilinear model");
  add_shared(ident, shared);
  ident->add_option("--data", data_path, "dataset CSV (default <out>/data.csv)");
  flag(ident, "--degree", "degree", "monomial degree");

  auto* analyze = app.add_subcommand("analyze", "deviation analysis at one initial state");
  add_shared(analyze, shared);
  analyze->add_option("--model", model_path, "model JSON (default <out>/model.json)");
  flag(analyze, "--x0", "x0", "initial state, comma separated");
  flag(analyze, "--step", "step", "integration step");

  auto* sweep = app.add_subcommand("sweep", "deviation analysis over a grid");
  add_shared(sweep, shared);
  sweep->add_option("--model", model_path, "model JSON (default <out>/model.json)");
  flag(sweep, "--resolution", "resolution", "grid points per axis");
  flag(sweep, "--step", "step", "integration step");

  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  add_shared(verify, shared);
  verify->add_option("--skip", skip, "'slow' skips the long-running criteria")
      ->check(CLI::IsMember({"slow"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::kSuccess : ExitCode::kUsage;
  }

  try {
    const RunConfig config = resolve(shared, flags);
    if (*gen) {
      cli::cmd_gen_data(config, std::cout);
    } else if (*ident) {
      cli::cmd_identify(config, default_path(config, data_path, "data.csv"), std::cout);
    } else if (*analyze) {
      const DeviationReport report =
          cli::cmd_analyze(config, default_path(config, model_path, "model.json"), std::cout);
      if (!report.failure.empty()) return ExitCode::kNumerical;
    } else if (*sweep) {
      cli::cmd_sweep(config, default_path(config, model_path, "model.json"), std::cout);
    } else if (*verify) {
      acceptance::Options options;
      options.config = config;
      options.skip_slow = skip == "slow";
      options.scratch_dir = (std::filesystem::path(config.out) / "verify").string();
      const auto results = acceptance::run_all(options, std::cout);
      return acceptance::all_passed(results) ? ExitCode::kSuccess : ExitCode::kAcceptance;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const UnsupportedPlantError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return ExitCode::kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kUsage;
  }
  return ExitCode::kSuccess;
}
