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
#ifndef KOOPDEV_TOOLS_COMMANDS_HPP
#define KOOPDEV_TOOLS_COMMANDS_HPP

#include <ostream>
#include <string>

#include "koopdev/config.hpp"

namespace koopdev::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kNumerical = 2,
  kAcceptance = 3,
};

/// Writes <out>/data.csv. Returns the path.
std::string cmd_gen_data(const RunConfig& config, std::ostream& log);

/// Reads the data file and writes <out>/model.json. Returns the path.
std::string cmd_identify(const RunConfig& config, const std::string& data_path, std::ostream& log);

/// Analyzes config.x0 and writes <out>/report.json and
/// <out>/nominal_trajectory.csv.
DeviationReport cmd_analyze(const RunConfig& config, const std::string& model_path,
                            std::ostream& log);

/// Writes <out>/sweep.csv and <out>/summary.json.
SweepSummary cmd_sweep(const RunConfig& config, const std::string& model_path, std::ostream& log);

/// Builds the plant, the basis and the identified model for a config in
/// memory (gen-data followed by identify without files).
LiftedBilinearModel build_model(const RunConfig& config);

}  // namespace koopdev::cli

#endif  // KOOPDEV_TOOLS_COMMANDS_HPP
