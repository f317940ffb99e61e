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
#include <cstring>
#include <iostream>

#include "acceptance.hpp"

int main(int argc, char** argv) {
  koopdev::acceptance::Options options;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--skip-slow") == 0) options.skip_slow = true;
  }
  const auto results = koopdev::acceptance::run_all(options, std::cout);
  int passed = 0, failed = 0, skipped = 0;
  for (const auto& r : results) {
    if (r.skipped) {
      ++skipped;
    } else if (r.passed) {
      ++passed;
    } else {
      ++failed;
    }
  }
  std::cout << passed << " passed, " << failed << " failed, " << skipped << " skipped\n";
  return failed == 0 ? 0 : 3;
}
