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
#ifndef KOOPDEV_TOOLS_ACCEPTANCE_HPP
#define KOOPDEV_TOOLS_ACCEPTANCE_HPP

#include <ostream>
#include <string>
#include <vector>

#include "koopdev/config.hpp"

namespace koopdev::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool slow = false;
  bool skipped = false;
  bool passed = false;
  double seconds = 0.0;
  double time_limit = 0.0;  // seconds
  std::string detail;
};

struct Options {
  RunConfig config;
  bool skip_slow = false;
  /// Scratch directory for the determinism check's sweep files.
  std::string scratch_dir = "acceptance_scratch";
};

/// Runs every acceptance criterion, printing one PASS / FAIL / SKIP line per
/// criterion to `log` as it finishes. A criterion fails when its check fails
/// or it exceeds its time limit.
std::vector<CriterionResult> run_all(const Options& options, std::ostream& log);

/// True when no executed criterion failed.
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace koopdev::acceptance

#endif  // KOOPDEV_TOOLS_ACCEPTANCE_HPP
