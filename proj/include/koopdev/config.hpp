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
#ifndef KOOPDEV_CONFIG_HPP
#define KOOPDEV_CONFIG_HPP

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "koopdev/deviation.hpp"

namespace koopdev {

/**
 * Parameters of one pipeline run. The text form is one `key = value` per line
 * ('#' starts a comment); list values are comma separated. Unknown keys are
 * rejected.
 *
 * The digest covers every key that can change a numerical result, so the
 * output directory and the thread count are left out of it.
 */
struct RunConfig {
  std::string plant = "example";
  int degree = 4;

  int n_traj = 40;
  double t_len = 1.0;
  double data_step = 0.01;
  double u_max = 2.0;
  double hold = 0.1;
  std::uint64_t seed = 1;

  std::vector<double> qbar = {1.0, 1.0};  // diagonal of Qbar
  std::vector<double> r = {1.0};          // diagonal of R
  double beta = 1.0;
  double regularization = 0.0;
  double rtol = 1e-10;

  std::vector<double> region_lower = {-1.0, -1.0};
  std::vector<double> region_upper = {1.0, 1.0};
  int resolution = 21;
  int lipschitz_resolution = 201;

  double horizon = 20.0;
  double step = 1e-3;
  double stop_norm = 1e-6;
  double divergence_guard = 1e6;

  double slack_relative = 0.05;
  double slack_floor = 0.01;
  double truncation_threshold = 0.05;

  int adversarial_samples = 200;
  int adversarial_points = 10;

  std::vector<double> x0 = {1.0, 1.0};

  std::string out = "out";
  int jobs = 0;

  /// Throws InvalidArgument for unknown keys and ParseError for bad values.
  void set(const std::string& key, const std::string& value);
  /// Range checks across fields. Throws InvalidArgument.
  void validate() const;

  /// Canonical text form, every key in a fixed order. Reading it back gives an
  /// equal config.
  std::string to_text() const;
  /// Digest of the canonical text without `out` and `jobs`.
  std::string digest() const;

  Box region() const;
  DataCollectionConfig data_config() const;
  IdentifyConfig identify_config() const;
  IntegrationOptions integration() const;
  AnalysisOptions analysis() const;
  OcpWeights weights(const DictionaryBasis& basis) const;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace koopdev

#endif  // KOOPDEV_CONFIG_HPP
