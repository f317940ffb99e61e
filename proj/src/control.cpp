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
#include "koopdev/control.hpp"

#include <cmath>

namespace koopdev {

namespace {

Matrix state_weight(const LiftedBilinearModel& model, const OcpWeights& weights,
                    double regularization) {
  if (!(regularization >= 0.0)) throw InvalidArgument("regularization must be >= 0");
  Matrix Q = weights.has_lifted() ? weights.lifted_Q()
                                  : Matrix(model.C.transpose() * weights.Qbar() * model.C);
  if (Q.rows() != model.lifted_dim()) {
    throw DimensionError("lifted state weight does not match the model");
  }
  Q.diagonal().array() += regularization;
  return Q;
}

NominalSolution assemble(const Vector& z, const Matrix& Bz, const Matrix& R_inv,
                         CareSolution care) {
  NominalSolution sol;
  sol.z = z;
  sol.gradV0 = care.P * z;
  sol.V0 = 0.5 * z.dot(sol.gradV0);
  sol.u0 = -R_inv * (Bz.transpose() * sol.gradV0);
  sol.care = std::move(care);
  return sol;
}

}  // namespace

Matrix input_matrix(const LiftedBilinearModel& model, const Vector& z) {
  return model.input_matrix(z);
}

NominalSolution nominal_solution(const LiftedBilinearModel& model, const OcpWeights& weights,
                                 const Vector& x, const ControlOptions& options) {
  require_dim(x, model.basis.state_dim(), "nominal_solution");
  const Vector z = model.basis.lift(x);
  const Matrix Q = state_weight(model, weights, options.regularization);
  const Matrix Bz = model.input_matrix(z);
  CareSolution care = solve_care(model.A, Bz, Q, weights.R(), options.care);
  return assemble(z, Bz, weights.R().inverse(), std::move(care));
}

SdreController::SdreController(const LiftedBilinearModel& model, const OcpWeights& weights,
                               ControlOptions options)
    : model_(&model),
      Q_(state_weight(model, weights, options.regularization)),
      R_(weights.R()),
      R_inv_(weights.R().inverse()),
      tracker_(options.care) {
  if (R_.rows() != model.input_dim) throw DimensionError("SdreController: R does not match m");
}

NominalSolution SdreController::at_lifted(const Vector& z) {
  require_dim(z, model_->lifted_dim(), "SdreController");
  const Matrix Bz = model_->input_matrix(z);
  return assemble(z, Bz, R_inv_, tracker_.solve(model_->A, Bz, Q_, R_));
}

Trajectory simulate_nominal(const LiftedBilinearModel& model, const OcpWeights& weights,
                            const Vector& x0, const IntegrationOptions& integration,
                            const ControlOptions& options) {
  require_dim(x0, model.basis.state_dim(), "simulate_nominal");
  SdreController controller(model, weights, options);
  const Matrix Q = state_weight(model, weights, 0.0);
  std::vector<double> values;
  std::vector<Vector> gradients;
  Trajectory traj = integrate_field(
      [&model](const Vector& z, const Vector& u) { return model.nominal_field(z, u); },
      [&](const Vector& z) {
        NominalSolution sol = controller.at_lifted(z);
        values.push_back(sol.V0);
        gradients.push_back(std::move(sol.gradV0));
        return sol.u0;
      },
      [&](const Vector& z, const Vector& u) {
        return 0.5 * (z.dot(Q * z) + u.dot(weights.R() * u));
      },
      model.basis.lift(x0), integration);
  traj.values = std::move(values);
  traj.value_gradients = std::move(gradients);
  return traj;
}

EnergyEstimate gradient_energy(const Trajectory& traj) {
  if (traj.value_gradients.size() != traj.size() || traj.empty()) {
    throw InvalidArgument("gradient_energy: trajectory carries no value gradients");
  }
  EnergyEstimate est;
  if (traj.size() < 2) return est;
  const double t0 = traj.times.front();
  const double tail_start = t0 + 0.9 * (traj.times.back() - t0);
  double tail = 0.0;
  double prev = traj.value_gradients[0].squaredNorm();
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double cur = traj.value_gradients[k].squaredNorm();
    const double piece = 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
    est.total += piece;
    if (traj.times[k - 1] >= tail_start) tail += piece;
    prev = cur;
  }
  est.tail_fraction = est.total > 0.0 ? tail / est.total : 0.0;
  return est;
}

double sdre_hjb_residual(const LiftedBilinearModel& model, const OcpWeights& weights,
                         const NominalSolution& sol) {
  const Matrix Q = state_weight(model, weights, 0.0);
  return sol.gradV0.dot(model.nominal_field(sol.z, sol.u0)) +
         0.5 * (sol.z.dot(Q * sol.z) + sol.u0.dot(weights.R() * sol.u0));
}

}  // namespace koopdev
