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
#ifndef KOOPDEV_DYNAMICS_HPP
#define KOOPDEV_DYNAMICS_HPP

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "koopdev/lifting.hpp"
#include "koopdev/types.hpp"

namespace koopdev {

using VectorField = std::function<Vector(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;
using StateFeedback = std::function<Vector(const Vector&)>;

/// Analytic optimum of the quadratic regulation problem, when known.
struct AnalyticOptimum {
  ScalarField value;
  VectorField value_gradient;
  StateFeedback controller;
};

/**
 * x' = f(x) + sum_i g_i(x) u_i with f(0) = 0.
 */
class ControlAffineSystem {
 public:
  /// Throws InvalidArgument when f(0) != 0 (tolerance 1e-12) or sizes are off.
  ControlAffineSystem(std::string name, int state_dim, VectorField drift,
                      std::vector<VectorField> input_fields,
                      std::optional<AnalyticOptimum> optimum = std::nullopt);

  const std::string& name() const { return name_; }
  int state_dim() const { return state_dim_; }
  int input_dim() const { return static_cast<int>(input_fields_.size()); }

  Vector drift(const Vector& x) const;
  /// Columns g_1(x) .. g_m(x).
  Matrix input_matrix(const Vector& x) const;
  Vector vector_field(const Vector& x, const Vector& u) const;

  const std::optional<AnalyticOptimum>& optimum() const { return optimum_; }

 private:
  std::string name_;
  int state_dim_;
  VectorField drift_;
  std::vector<VectorField> input_fields_;
  std::optional<AnalyticOptimum> optimum_;
};

/// Quadratic weights of the regulation cost, with Q = C^T Qbar C in lifted
/// coordinates.
class OcpWeights {
 public:
  /// Validates symmetry (1e-12) and positive definiteness.
  OcpWeights(Matrix Qbar, Matrix R);
  /// Same, also forming Q = C^T Qbar C for the basis selector C.
  OcpWeights(Matrix Qbar, Matrix R, const DictionaryBasis& basis);

  const Matrix& Qbar() const { return Qbar_; }
  const Matrix& R() const { return R_; }
  /// Throws InvalidArgument when constructed without a basis.
  const Matrix& lifted_Q() const;
  bool has_lifted() const { return lifted_Q_.size() != 0; }
  double lambda_min_Qbar() const { return lambda_min_Qbar_; }
  double lambda_min_R() const { return lambda_min_R_; }

  /// 1/2 (x^T Qbar x + u^T R u)
  double running_cost(const Vector& x, const Vector& u) const;
  /// 1/2 (z^T Q z + u^T R u)
  double lifted_running_cost(const Vector& z, const Vector& u) const;

 private:
  Matrix Qbar_;
  Matrix R_;
  Matrix lifted_Q_;
  double lambda_min_Qbar_;
  double lambda_min_R_;
};

/// Time series of a closed-loop run. `values` and `value_gradients` are filled
/// only by the lifted nominal simulation.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<double> running_cost;
  std::vector<double> values;
  std::vector<Vector> value_gradients;
  bool diverged = false;
  bool stopped_early = false;  // state norm fell below the stop threshold

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Thrown when the state becomes non-finite; carries the samples recorded so
/// far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Trajectory partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

struct IntegrationOptions {
  double horizon = 20.0;
  double step = 1e-3;
  double divergence_guard = 1e6;
  /// Stop once ||x|| < stop_norm; 0 disables.
  double stop_norm = 1e-6;
};

/// Classical RK4 with the input held at its start-of-step value. Stops early
/// with diverged = true when ||x|| exceeds the guard. running_cost is
/// 1/2 (x^T Qbar x + u^T R u) from `weights`.
Trajectory integrate(const ControlAffineSystem& system, const StateFeedback& controller,
                     const Vector& x0, const OcpWeights& weights,
                     const IntegrationOptions& options = {});

/// Generic fixed-step RK4 driver shared by the plant and the lifted model.
/// `cost(x, u)` fills running_cost.
Trajectory integrate_field(const std::function<Vector(const Vector&, const Vector&)>& field,
                           const StateFeedback& controller,
                           const std::function<double(const Vector&, const Vector&)>& cost,
                           const Vector& x0, const IntegrationOptions& options);

struct CostEstimate {
  double total = 0.0;
  double quadrature = 0.0;  // trapezoidal part over the recorded horizon
  double tail = 0.0;        // 1/2 x_T^T P_tail x_T, or 0 without a tail matrix
  double tail_fraction = 0.0;
  bool infinite = false;
};

/// Trapezoidal quadrature of the running cost plus an optional quadratic tail
/// estimate. A diverged trajectory yields total = +inf.
CostEstimate quadratic_cost(const Trajectory& traj, const Matrix* tail_matrix = nullptr);

/// Riccati matrix of the linearization at the origin (Jacobians by central
/// differences), used for tail estimates. nullopt when no stabilizing solution
/// exists.
std::optional<Matrix> linearization_tail_matrix(const ControlAffineSystem& system,
                                                const OcpWeights& weights);

/// dV/dx (f + g u) + 1/2 x^T Qbar x + 1/2 u^T R u with u = controller(x).
double hjb_residual(const ControlAffineSystem& system, const OcpWeights& weights,
                    const VectorField& value_gradient, const StateFeedback& controller,
                    const Vector& x);

/// Same with the gradient of `value` taken by central differences.
double hjb_residual_fd(const ControlAffineSystem& system, const OcpWeights& weights,
                       const ScalarField& value, const StateFeedback& controller, const Vector& x,
                       double fd_step = 1e-6);

/// x1' = -x1 + x2, x2' = -(x1 + x2)/2 + x1^2 x2 / 2 + x1 u, with the known
/// optimum V*(x) = x1^2/4 + x2^2/2 and u*(x) = -x1 x2 for Qbar = I, R = 1.
ControlAffineSystem paper_example_system();

double analytic_value(const Vector& x);
Vector analytic_controller(const Vector& x);

/// x' = -x, scalar, with a zero input field. Used for integrator checks.
ControlAffineSystem scalar_decay_system();

/// Builtin plant by name: "example" or "decay". Throws InvalidArgument.
ControlAffineSystem make_builtin_system(const std::string& name);

/// CSV header t,x1..xn,u1..um,running_cost (+ V0,gradV0_norm when the
/// trajectory carries value samples).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace koopdev

#endif  // KOOPDEV_DYNAMICS_HPP
