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
#include "koopdev/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "koopdev/io.hpp"
#include "koopdev/riccati.hpp"

namespace koopdev {

namespace {

double min_eigenvalue_checked(const Matrix& M, const char* name) {
  if (M.rows() == 0 || M.rows() != M.cols()) {
    throw DimensionError(std::string("OcpWeights: ") + name + " must be square and nonempty");
  }
  if (!M.allFinite()) throw InvalidArgument(std::string("OcpWeights: ") + name + " not finite");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument(std::string("OcpWeights: ") + name + " not symmetric");
  }
  const double lambda = Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
  if (!(lambda > 0.0)) {
    throw InvalidArgument(std::string("OcpWeights: ") + name + " not positive definite");
  }
  return lambda;
}

}  // namespace

ControlAffineSystem::ControlAffineSystem(std::string name, int state_dim, VectorField drift,
                                         std::vector<VectorField> input_fields,
                                         std::optional<AnalyticOptimum> optimum)
    : name_(std::move(name)),
      state_dim_(state_dim),
      drift_(std::move(drift)),
      input_fields_(std::move(input_fields)),
      optimum_(std::move(optimum)) {
  if (state_dim_ < 1) throw InvalidArgument("ControlAffineSystem: state_dim must be >= 1");
  if (input_fields_.empty()) throw InvalidArgument("ControlAffineSystem: no input fields");
  const Vector f0 = drift_(Vector::Zero(state_dim_));
  if (f0.size() != state_dim_) throw DimensionError("ControlAffineSystem: drift has wrong size");
  if (f0.cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("ControlAffineSystem: origin is not an equilibrium (f(0) != 0)");
  }
}

Vector ControlAffineSystem::drift(const Vector& x) const {
  require_dim(x, state_dim_, "drift");
  return drift_(x);
}

Matrix ControlAffineSystem::input_matrix(const Vector& x) const {
  require_dim(x, state_dim_, "input_matrix");
  Matrix G(state_dim_, input_dim());
  for (int i = 0; i < input_dim(); ++i) G.col(i) = input_fields_[i](x);
  return G;
}

Vector ControlAffineSystem::vector_field(const Vector& x, const Vector& u) const {
  require_dim(u, input_dim(), "vector_field");
  return drift(x) + input_matrix(x) * u;
}

OcpWeights::OcpWeights(Matrix Qbar, Matrix R) : Qbar_(std::move(Qbar)), R_(std::move(R)) {
  lambda_min_Qbar_ = min_eigenvalue_checked(Qbar_, "Qbar");
  lambda_min_R_ = min_eigenvalue_checked(R_, "R");
}

OcpWeights::OcpWeights(Matrix Qbar, Matrix R, const DictionaryBasis& basis)
    : OcpWeights(std::move(Qbar), std::move(R)) {
  if (Qbar_.rows() != basis.state_dim()) {
    throw DimensionError("OcpWeights: Qbar size does not match basis state_dim");
  }
  const Matrix C = basis.projection_matrix();
  lifted_Q_ = C.transpose() * Qbar_ * C;
}

const Matrix& OcpWeights::lifted_Q() const {
  if (!has_lifted()) throw InvalidArgument("OcpWeights: no basis attached, lifted_Q undefined");
  return lifted_Q_;
}

double OcpWeights::running_cost(const Vector& x, const Vector& u) const {
  return 0.5 * (x.dot(Qbar_ * x) + u.dot(R_ * u));
}

double OcpWeights::lifted_running_cost(const Vector& z, const Vector& u) const {
  return 0.5 * (z.dot(lifted_Q() * z) + u.dot(R_ * u));
}

Trajectory integrate_field(const std::function<Vector(const Vector&, const Vector&)>& field,
                           const StateFeedback& controller,
                           const std::function<double(const Vector&, const Vector&)>& cost,
                           const Vector& x0, const IntegrationOptions& options) {
  if (!(options.step > 0.0)) throw InvalidArgument("integrate: step must be positive");
  if (!(options.horizon >= options.step)) {
    throw InvalidArgument("integrate: horizon must be >= step");
  }
  if (!x0.allFinite()) throw InvalidArgument("integrate: non-finite initial state");
  const long long steps = std::llround(options.horizon / options.step);
  const double h = options.step;

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  traj.running_cost.reserve(steps + 1);

  Vector x = x0;
  for (long long k = 0; k <= steps; ++k) {
    if (!x.allFinite()) {
      traj.diverged = true;
      throw DivergenceError("integrate: non-finite state at t = " + format_number(k * h),
                            std::move(traj));
    }
    const double norm = x.norm();
    const Vector u = controller(x);
    traj.times.push_back(k * h);
    traj.states.push_back(x);
    traj.inputs.push_back(u);
    traj.running_cost.push_back(cost(x, u));
    if (norm > options.divergence_guard) {
      traj.diverged = true;
      break;
    }
    if (options.stop_norm > 0.0 && norm < options.stop_norm) {
      traj.stopped_early = k < steps;
      break;
    }
    if (k == steps) break;
    const Vector k1 = field(x, u);
    const Vector k2 = field(x + 0.5 * h * k1, u);
    const Vector k3 = field(x + 0.5 * h * k2, u);
    const Vector k4 = field(x + h * k3, u);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

Trajectory integrate(const ControlAffineSystem& system, const StateFeedback& controller,
                     const Vector& x0, const OcpWeights& weights,
                     const IntegrationOptions& options) {
  require_dim(x0, system.state_dim(), "integrate");
  if (weights.Qbar().rows() != system.state_dim() || weights.R().rows() != system.input_dim()) {
    throw DimensionError("integrate: weights do not match the system");
  }
  return integrate_field(
      [&system](const Vector& x, const Vector& u) { return system.vector_field(x, u); },
      controller,
      [&weights](const Vector& x, const Vector& u) { return weights.running_cost(x, u); }, x0,
      options);
}

CostEstimate quadratic_cost(const Trajectory& traj, const Matrix* tail_matrix) {
  if (traj.empty()) throw InvalidArgument("quadratic_cost: empty trajectory");
  CostEstimate est;
  if (traj.diverged) {
    est.infinite = true;
    est.total = est.quadrature = std::numeric_limits<double>::infinity();
    return est;
  }
  for (std::size_t k = 1; k < traj.size(); ++k) {
    est.quadrature +=
        0.5 * (traj.times[k] - traj.times[k - 1]) * (traj.running_cost[k] + traj.running_cost[k - 1]);
  }
  if (tail_matrix != nullptr && tail_matrix->rows() == traj.states.back().size()) {
    const Vector& xT = traj.states.back();
    est.tail = 0.5 * xT.dot(*tail_matrix * xT);
  }
  est.total = est.quadrature + est.tail;
  est.tail_fraction = est.total > 0.0 ? est.tail / est.total : 0.0;
  return est;
}

std::optional<Matrix> linearization_tail_matrix(const ControlAffineSystem& system,
                                                const OcpWeights& weights) {
  const int n = system.state_dim();
  const double h = 1e-6;
  Matrix A(n, n);
  for (int j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e[j] = h;
    A.col(j) = (system.drift(e) - system.drift(-e)) / (2.0 * h);
  }
  const Matrix B = system.input_matrix(Vector::Zero(n));
  try {
    return solve_care(A, B, weights.Qbar(), weights.R()).P;
  } catch (const SolverError&) {
    return std::nullopt;
  }
}

double hjb_residual(const ControlAffineSystem& system, const OcpWeights& weights,
                    const VectorField& value_gradient, const StateFeedback& controller,
                    const Vector& x) {
  require_dim(x, system.state_dim(), "hjb_residual");
  const Vector u = controller(x);
  const Vector grad = value_gradient(x);
  require_dim(grad, system.state_dim(), "hjb_residual gradient");
  return grad.dot(system.vector_field(x, u)) + weights.running_cost(x, u);
}

double hjb_residual_fd(const ControlAffineSystem& system, const OcpWeights& weights,
                       const ScalarField& value, const StateFeedback& controller, const Vector& x,
                       double fd_step) {
  const auto gradient = [&](const Vector& p) {
    Vector g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Vector e = Vector::Zero(p.size());
      e[i] = fd_step;
      g[i] = (value(p + e) - value(p - e)) / (2.0 * fd_step);
    }
    return g;
  };
  return hjb_residual(system, weights, gradient, controller, x);
}

double analytic_value(const Vector& x) {
  require_dim(x, 2, "analytic_value");
  return 0.25 * x[0] * x[0] + 0.5 * x[1] * x[1];
}

Vector analytic_controller(const Vector& x) {
  require_dim(x, 2, "analytic_controller");
  return Vector::Constant(1, -x[0] * x[1]);
}

ControlAffineSystem paper_example_system() {
  VectorField drift = [](const Vector& x) {
    Vector f(2);
    f << -x[0] + x[1], -0.5 * (x[0] + x[1]) + 0.5 * x[0] * x[0] * x[1];
    return f;
  };
  VectorField g1 = [](const Vector& x) {
    Vector g(2);
    g << 0.0, x[0];
    return g;
  };
  AnalyticOptimum optimum{
      analytic_value,
      [](const Vector& x) {
        Vector g(2);
        g << 0.5 * x[0], x[1];
        return g;
      },
      analytic_controller};
  return ControlAffineSystem("example", 2, std::move(drift), {std::move(g1)}, std::move(optimum));
}

ControlAffineSystem scalar_decay_system() {
  return ControlAffineSystem(
      "decay", 1, [](const Vector& x) -> Vector { return -x; },
      {[](const Vector&) -> Vector { return Vector::Zero(1); }});
}

ControlAffineSystem make_builtin_system(const std::string& name) {
  if (name == "example") return paper_example_system();
  if (name == "decay") return scalar_decay_system();
  throw InvalidArgument("unknown plant '" + name + "' (expected 'example' or 'decay')");
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.empty()) return;
  const Eigen::Index n = traj.states.front().size();
  const Eigen::Index m = traj.inputs.front().size();
  const bool lifted = traj.values.size() == traj.size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i + 1;
  out << ",running_cost";
  if (lifted) out << ",V0,gradV0_norm";
  out << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_number(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(traj.states[k][i]);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_number(traj.inputs[k][i]);
    out << ',' << format_number(traj.running_cost[k]);
    if (lifted) {
      out << ',' << format_number(traj.values[k]) << ','
          << format_number(traj.value_gradients[k].norm());
    }
    out << '\n';
  }
}

}  // namespace koopdev
