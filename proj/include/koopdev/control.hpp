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
#ifndef KOOPDEV_CONTROL_HPP
#define KOOPDEV_CONTROL_HPP

#include "koopdev/dynamics.hpp"
#include "koopdev/edmd.hpp"
#include "koopdev/riccati.hpp"

namespace koopdev {

struct ControlOptions {
  /// Q + regularization * I is used in place of the lifted state weight.
  double regularization = 0.0;
  CareOptions care;
};

/// B(z) = B0 + sum_i B_i z e_i^T.
Matrix input_matrix(const LiftedBilinearModel& model, const Vector& z);

/// SDRE solution of the nominal lifted problem at one state.
struct NominalSolution {
  Vector z;
  Vector u0;       // -R^-1 B(z)^T P z
  double V0 = 0.0; // 1/2 z^T P z
  Vector gradV0;   // P z
  CareSolution care;
};

/// Lifts x and solves the frozen-coefficient CARE (A, B(z), C^T Qbar C, R).
/// Propagates SolverError.
NominalSolution nominal_solution(const LiftedBilinearModel& model, const OcpWeights& weights,
                                 const Vector& x, const ControlOptions& options = {});

/**
 * State-dependent Riccati feedback on the lifted model. Successive queries
 * along one trajectory reuse the previous Riccati solution through a
 * CareTracker, so an instance belongs to a single trajectory at a time.
 */
class SdreController {
 public:
  SdreController(const LiftedBilinearModel& model, const OcpWeights& weights,
                 ControlOptions options = {});

  NominalSolution at_lifted(const Vector& z);
  NominalSolution at_state(const Vector& x) { return at_lifted(model_->basis.lift(x)); }

  /// Forget the warm start, e.g. before a new trajectory.
  void reset() { tracker_.reset(); }

 private:
  const LiftedBilinearModel* model_;
  Matrix Q_;
  Matrix R_;
  Matrix R_inv_;
  CareTracker tracker_;
};

/// Integrates z' = A z + B(z) u with u = u0*(z) from z0 = Psi(x0), re-solving
/// the Riccati equation at every step. The trajectory records z, u, the
/// lifted running cost, V0 and P(z) z. The stop threshold applies to ||z||.
Trajectory simulate_nominal(const LiftedBilinearModel& model, const OcpWeights& weights,
                            const Vector& x0, const IntegrationOptions& integration = {},
                            const ControlOptions& options = {});

struct EnergyEstimate {
  double total = 0.0;
  /// Share of the total collected over the last 10% of the time span.
  double tail_fraction = 0.0;
};

/// Trapezoidal integral of ||grad V0||^2 over the recorded gradients.
/// Throws InvalidArgument when the trajectory carries no gradients.
EnergyEstimate gradient_energy(const Trajectory& traj);

/// Pointwise lifted HJB expression grad^T (A z + B(z) u) + 1/2 z^T Q z +
/// 1/2 u^T R u at the SDRE solution, with grad = P z.
double sdre_hjb_residual(const LiftedBilinearModel& model, const OcpWeights& weights,
                         const NominalSolution& sol);

}  // namespace koopdev

#endif  // KOOPDEV_CONTROL_HPP
