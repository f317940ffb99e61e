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
#ifndef KOOPDEV_DEVIATION_HPP
#define KOOPDEV_DEVIATION_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "koopdev/control.hpp"

namespace koopdev {

/**
 * Upper bound on |V - V0*| for any approximation error with
 * ||r(z, u)|| <= c1 ||z|| + c2 ||u||:
 *
 *   max{2 c1 L_p / sqrt(lambda_min(Qbar)), 2 c2 / sqrt(lambda_min(R))}
 *     * sqrt(V0* * int ||grad V0*||^2 dt)
 *
 * Throws InvalidArgument for negative inputs or nonpositive eigenvalues.
 */
double value_deviation_bound(double c1, double c2, double lipschitz, double lambda_min_Qbar,
                             double lambda_min_R, double V0_star, double grad_energy);

/// 2 dV [1 + sqrt(1 + dV / V0*)] bounding int (u0* - u*)^T R (u0* - u*) dt.
/// Returns 0 for dV = 0; throws InvalidArgument for V0* = 0 with dV > 0.
double controller_deviation_bound(double delta_V_max, double V0_star);

/// Tolerance added to a bound before declaring a violation:
/// max(relative * bound, floor).
struct SlackPolicy {
  double relative = 0.05;
  double floor = 0.01;

  double slack(double bound) const;
};

struct AnalysisOptions {
  IntegrationOptions integration;
  ControlOptions control;
  SlackPolicy slack;
  /// Gradient-energy or cost tail share above which a point is marked
  /// truncation_suspect.
  double truncation_threshold = 0.05;
  /// Region where L_p is valid; the model's Lipschitz region when unset.
  std::optional<Box> region;
  bool controller_deviation = true;
};

struct ValueMeasurement {
  double V_measured = 0.0;   // realized cost of u0* on the plant
  double V0_star = 0.0;      // 1/2 z0^T P(z0) z0
  double tail_fraction = 0.0;
  bool diverged = false;
  bool region_exit = false;
};

/// Drives the plant with u0*(Psi(x)) from x0 and integrates the quadratic cost.
/// A diverged run gives V_measured = +inf and diverged = true.
ValueMeasurement measure_value_deviation(const ControlAffineSystem& system,
                                         const LiftedBilinearModel& model,
                                         const OcpWeights& weights, const Vector& x0,
                                         const AnalysisOptions& options = {},
                                         const Matrix* tail_matrix = nullptr);

struct ControllerMeasurement {
  double integral = 0.0;  // int (u0* - u*)^T R (u0* - u*) dt
  bool diverged = false;
  bool region_exit = false;
};

/// Integrates the plant under its analytic optimal controller u* and
/// accumulates the R-weighted squared difference to u0*(Psi(x)) along that
/// trajectory. Throws UnsupportedPlantError without an analytic optimum.
ControllerMeasurement measure_controller_deviation(const ControlAffineSystem& system,
                                                   const LiftedBilinearModel& model,
                                                   const OcpWeights& weights, const Vector& x0,
                                                   const AnalysisOptions& options = {});

struct AdversarialOptions {
  int n_samples = 200;
  std::uint64_t seed = 1;
  AnalysisOptions analysis;
};

struct AdversarialSample {
  int index = 0;
  /// "zero", "worst_proxy", "best_proxy" or "random"
  std::string kind;
  double scale = 0.0;
  double cost = 0.0;
  double deviation = 0.0;  // |cost - nominal_cost|
  bool diverged = false;
  bool within_bound = false;
};

struct AdversarialResult {
  double V0_star = 0.0;
  double nominal_cost = 0.0;  // realized cost of u0* on the error-free model
  double grad_energy = 0.0;
  double delta_V_max = 0.0;
  double slack = 0.0;
  double max_V = 0.0;
  double max_deviation = 0.0;
  bool all_within_bound = true;
  std::vector<AdversarialSample> samples;
};

/**
 * Simulates z' = A z + B(z) u0* + r with admissible errors
 * r = s (c1 ||z|| + c2 ||u||) d, ||d|| = 1, s in [0, 1]. Sample 0 uses s = 0,
 * sample 1 the proxy worst case d = grad V0* / ||grad V0*||, sample 2 the
 * opposite direction, and the rest a fixed random direction with random s.
 * The proxy directions are frozen over each integration step together with
 * the input. Sample k draws from its own stream seeded by (seed, k).
 *
 * A sample is within bound when |V - V_nom| <= dV + slack, where V_nom is the
 * realized nominal cost of u0* (the s = 0 sample).
 */
AdversarialResult adversarial_error_sweep(const LiftedBilinearModel& model,
                                          const OcpWeights& weights, const Vector& x0,
                                          const AdversarialOptions& options = {},
                                          Parallelism par = {});

/// Per-initial-state record of the bounds and their empirical counterparts.
/// Unavailable quantities are NaN.
struct DeviationReport {
  Vector x0;
  double V0_star = 0.0;
  double grad_energy = 0.0;
  double grad_energy_tail = 0.0;
  double delta_V_max = 0.0;
  double V_measured = 0.0;
  double V_star = 0.0;
  double value_gap = 0.0;  // V* - V0*
  double ctrl_dev = 0.0;
  double ctrl_dev_bound = 0.0;
  bool ok_thm5 = false;
  bool ok_thm6 = false;
  /// truncation_suspect, region_exit, diverged, care_failure,
  /// plant_model_disagree, no_analytic_optimum
  std::vector<std::string> flags;
  std::string failure;  // non-empty when the point could not be analyzed

  bool has_flag(const std::string& flag) const;
  /// A violated check without a truncation or region-exit diagnostic.
  bool unexplained_violation() const;
};

/**
 * Full analysis at one initial state: nominal SDRE solution, nominal lifted
 * closed loop and its gradient energy, the value bound, the plant cost under
 * u0*, the gap to the analytic optimum and the controller deviation with its
 * bound. The value check uses V* - V0* when the analytic optimum is known and
 * |V_measured - V0*| otherwise; the latter is also reported as
 * plant_model_disagree when it exceeds the bound. Failures are recorded in the
 * report, not thrown.
 */
DeviationReport analyze_point(const ControlAffineSystem& system, const LiftedBilinearModel& model,
                              const OcpWeights& weights, const Vector& x0,
                              const AnalysisOptions& options = {},
                              const Matrix* tail_matrix = nullptr);

/// Grid point k = i * resolution + j is (lower_1 + i h_1, lower_2 + j h_2, ...)
/// with the first axis slowest.
std::vector<Vector> grid_points(const Box& region, int resolution);

/// analyze_point over grid_points(region, resolution), OpenMP over points.
/// Output order follows the grid order regardless of scheduling.
std::vector<DeviationReport> grid_sweep(const ControlAffineSystem& system,
                                        const LiftedBilinearModel& model,
                                        const OcpWeights& weights, const Box& region,
                                        int resolution, const AnalysisOptions& options = {},
                                        Parallelism par = {});

namespace reference {
/// Single-threaded grid_sweep.
std::vector<DeviationReport> grid_sweep(const ControlAffineSystem& system,
                                        const LiftedBilinearModel& model,
                                        const OcpWeights& weights, const Box& region,
                                        int resolution, const AnalysisOptions& options = {});
}  // namespace reference

struct SweepSummary {
  std::size_t points = 0;
  std::size_t failures = 0;
  std::size_t thm5_violations = 0;
  std::size_t thm6_violations = 0;
  std::size_t unexplained_violations = 0;
  double gap_min = 0.0, gap_max = 0.0, gap_mean = 0.0;
  double dV_min = 0.0, dV_max = 0.0, dV_mean = 0.0;
  double ctrl_dev_max = 0.0, ctrl_dev_bound_max = 0.0;
  double thm5_pass_rate = 0.0;
  double thm6_pass_rate = 0.0;
};

SweepSummary summarize(const std::vector<DeviationReport>& reports);

/// '#' comment line with tool, version and digest, then
/// x1,x2,V0,grad_energy,dVmax,V_measured,V_star,gap,ctrl_dev,ctrl_dev_bound,
/// ok_thm5,ok_thm6,diag_flags. Flags are ';'-joined, "none" when empty.
void write_sweep_csv(std::ostream& out, const std::vector<DeviationReport>& reports,
                     const std::string& config_digest);

void write_summary_json(std::ostream& out, const SweepSummary& summary,
                        const std::string& config_digest);

/// JSON record of a single report.
void write_report_json(std::ostream& out, const DeviationReport& report,
                       const std::string& config_digest);

}  // namespace koopdev

#endif  // KOOPDEV_DEVIATION_HPP
