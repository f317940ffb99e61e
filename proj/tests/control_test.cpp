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
#include <gtest/gtest.h>

#include <cmath>

#include "koopdev/control.hpp"

namespace koopdev {
namespace {

// z' = A z + B0 u on the linear dictionary, where the SDRE law is LQR.
LiftedBilinearModel linear_model() {
  LiftedBilinearModel m(build_monomial_basis(2, 1));
  m.input_dim = 1;
  m.A.resize(2, 2);
  m.A << 0.0, 1.0, 2.0, -1.0;
  m.B0.resize(2, 1);
  m.B0 << 0.0, 1.0;
  m.B = {Matrix::Zero(2, 2)};
  m.C = Matrix::Identity(2, 2);
  return m;
}

LiftedBilinearModel bilinear_model() {
  LiftedBilinearModel m(build_monomial_basis(2, 2));
  const int N = 5;
  m.input_dim = 1;
  m.A = -Matrix::Identity(N, N);
  m.A(0, 1) = 1.0;
  m.B0 = Matrix::Zero(N, 1);
  m.B0(1, 0) = 0.5;
  m.B = {Matrix::Zero(N, N)};
  m.B[0](1, 0) = 1.0;
  m.B[0](3, 2) = 0.3;
  m.C = m.basis.projection_matrix();
  return m;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

TEST(InputMatrix, AddsBilinearColumns) {
  const LiftedBilinearModel m = bilinear_model();
  const Vector z = m.basis.lift(vec2(0.4, -0.7));
  const Matrix expected = m.B0 + m.B[0] * z;
  EXPECT_LT((input_matrix(m, z) - expected).norm(), 1e-15);
  EXPECT_EQ(m.input_matrix(z), input_matrix(m, z));
}

TEST(NominalSolution, SatisfiesFrozenRiccatiEquation) {
  const LiftedBilinearModel m = bilinear_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  const Vector x = vec2(0.5, 0.9);
  const NominalSolution s = nominal_solution(m, w, x);
  const Matrix B = input_matrix(m, s.z);
  EXPECT_LE(care_residual_norm(m.A, B, w.lifted_Q(), w.R(), s.care.P), 1e-9);
  EXPECT_NEAR(s.V0, 0.5 * s.z.dot(s.care.P * s.z), 1e-15);
  EXPECT_LT((s.u0 + B.transpose() * s.care.P * s.z).norm(), 1e-14);
  EXPECT_LT((s.gradV0 - s.care.P * s.z).norm(), 1e-15);
  EXPECT_GT(s.V0, 0.0);
}

TEST(NominalSolution, RegularizationChangesQ) {
  const LiftedBilinearModel m = bilinear_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  ControlOptions reg;
  reg.regularization = 0.1;
  const Vector x = vec2(0.5, 0.9);
  EXPECT_GT(nominal_solution(m, w, x, reg).V0, nominal_solution(m, w, x).V0);
}

TEST(SdreController, MatchesColdSolves) {
  const LiftedBilinearModel m = bilinear_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  SdreController ctrl(m, w);
  for (double t = 0.0; t < 1.0; t += 0.01) {
    const Vector x = vec2(std::cos(t), 0.5 * std::sin(3 * t));
    const NominalSolution warm = ctrl.at_state(x);
    const NominalSolution cold = nominal_solution(m, w, x);
    EXPECT_NEAR(warm.V0, cold.V0, 1e-9 * std::max(1.0, cold.V0));
    EXPECT_LT((warm.u0 - cold.u0).norm(), 1e-8);
  }
}

TEST(SimulateNominal, LinearModelCostConvergesToV0) {
  // the input is held over each step, so the realized cost is first order in h
  const LiftedBilinearModel m = linear_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  const Vector x0 = vec2(1.0, -0.5);
  const double V0 = nominal_solution(m, w, x0).V0;
  double previous = 0.0;
  for (double h : {2e-3, 1e-3}) {
    IntegrationOptions o;
    o.step = h;
    const Trajectory t = simulate_nominal(m, w, x0, o);
    ASSERT_EQ(t.values.size(), t.size());
    EXPECT_NEAR(t.values.front(), V0, 1e-15);
    EXPECT_TRUE(t.stopped_early);
    const double err = std::abs(quadratic_cost(t).total - V0);
    EXPECT_LT(err, 2.0 * h * V0);
    if (previous > 0.0) EXPECT_LT(err, 0.6 * previous);
    previous = err;
  }
}

TEST(GradientEnergy, LinearModelMatchesLyapunovIntegral) {
  const LiftedBilinearModel m = linear_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  const Vector x0 = vec2(0.3, 0.8);
  const Matrix P = nominal_solution(m, w, x0).care.P;
  const Matrix Acl = m.A - m.B0 * m.B0.transpose() * P;
  // int ||P z||^2 dt = z0^T X z0 with Acl^T X + X Acl + P^2 = 0
  const double exact = x0.dot(solve_lyapunov(Acl, P * P) * x0);
  double previous = 0.0;
  for (double h : {2e-3, 1e-3}) {
    IntegrationOptions o;
    o.step = h;
    const EnergyEstimate e = gradient_energy(simulate_nominal(m, w, x0, o));
    const double err = std::abs(e.total - exact);
    EXPECT_LT(err, 2.0 * h * exact);
    if (previous > 0.0) EXPECT_LT(err, 0.6 * previous);
    previous = err;
    EXPECT_LT(e.tail_fraction, 1e-6);
  }
}

TEST(GradientEnergy, RequiresGradients) {
  Trajectory t;
  t.times = {0.0, 1.0};
  t.states = {Vector::Ones(1), Vector::Ones(1)};
  EXPECT_THROW(gradient_energy(t), InvalidArgument);
}

TEST(SdreHjb, VanishesForLinearModel) {
  const LiftedBilinearModel m = linear_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  for (const Vector& x : {vec2(1, 1), vec2(-0.2, 0.6)}) {
    EXPECT_LE(std::abs(sdre_hjb_residual(m, w, nominal_solution(m, w, x))), 1e-12);
  }
}

}  // namespace
}  // namespace koopdev
