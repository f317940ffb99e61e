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
#include <sstream>

#include "koopdev/dynamics.hpp"

namespace koopdev {
namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

OcpWeights unit_weights() { return OcpWeights(Matrix::Identity(2, 2), Matrix::Identity(1, 1)); }

TEST(ExampleSystem, FieldsMatchClosedForm) {
  const ControlAffineSystem s = paper_example_system();
  const Vector x = vec2(0.6, -1.2);
  const Vector f = s.drift(x);
  EXPECT_NEAR(f[0], -0.6 - 1.2, 1e-15);
  EXPECT_NEAR(f[1], -0.5 * (0.6 - 1.2) + 0.5 * 0.36 * -1.2, 1e-15);
  const Matrix g = s.input_matrix(x);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_EQ(g(1, 0), 0.6);
  ASSERT_TRUE(s.optimum().has_value());
}

TEST(ExampleSystem, AnalyticOptimumSolvesHjb) {
  const ControlAffineSystem s = paper_example_system();
  const auto& opt = *s.optimum();
  for (double a : {-1.0, -0.3, 0.0, 0.8}) {
    for (double b : {-0.9, 0.2, 1.0}) {
      const Vector x = vec2(a, b);
      EXPECT_LE(std::abs(hjb_residual(s, unit_weights(), opt.value_gradient, opt.controller, x)), 1e-14);
      EXPECT_LE(std::abs(hjb_residual_fd(s, unit_weights(), opt.value, opt.controller, x)), 1e-8);
      EXPECT_DOUBLE_EQ(analytic_value(x), 0.25 * a * a + 0.5 * b * b);
      EXPECT_DOUBLE_EQ(analytic_controller(x)[0], -a * b);
    }
  }
}

TEST(ExampleSystem, SuboptimalControllerLeavesResidual) {
  const ControlAffineSystem s = paper_example_system();
  const StateFeedback zero = [](const Vector&) { return Vector::Zero(1); };
  // grad V* = (0.5, 1), f = (0, -0.5), running cost 1 at (1, 1)
  EXPECT_NEAR(hjb_residual(s, unit_weights(), s.optimum()->value_gradient, zero, vec2(1, 1)), 0.5, 1e-14);
}

TEST(Integrator, DecayMatchesExponential) {
  const ControlAffineSystem s = scalar_decay_system();
  const OcpWeights w(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  IntegrationOptions o;
  o.horizon = 1.0;
  o.step = 1e-3;
  o.stop_norm = 0.0;
  const Trajectory t = integrate(s, [](const Vector&) { return Vector::Zero(1); }, Vector::Ones(1), w, o);
  ASSERT_EQ(t.size(), 1001u);
  EXPECT_NEAR(t.states.back()[0], std::exp(-1.0), 1e-12);
  EXPECT_NEAR(quadratic_cost(t).total, 0.25 * (1.0 - std::exp(-2.0)), 1e-7);
  const auto tail = linearization_tail_matrix(s, w);
  ASSERT_TRUE(tail.has_value());
  EXPECT_NEAR((*tail)(0, 0), 0.5, 1e-9);
  EXPECT_NEAR(quadratic_cost(t, &*tail).total, 0.25, 1e-7);
}

TEST(Integrator, StopsBelowThreshold) {
  const ControlAffineSystem s = scalar_decay_system();
  const OcpWeights w(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  IntegrationOptions o;
  o.horizon = 50.0;
  o.step = 1e-2;
  o.stop_norm = 1e-3;
  const Trajectory t = integrate(s, [](const Vector&) { return Vector::Zero(1); }, Vector::Ones(1), w, o);
  EXPECT_TRUE(t.stopped_early);
  EXPECT_LT(t.states.back().norm(), 1e-3);
  EXPECT_NEAR(t.times.back(), std::log(1e3), 2e-2);
}

TEST(Integrator, GrowthIsFlaggedAsDiverged) {
  const ControlAffineSystem growth("growth", 1, [](const Vector& x) { return Vector(x); },
                                   {[](const Vector&) { return Vector::Zero(1); }});
  const OcpWeights w(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  IntegrationOptions o;
  o.horizon = 20.0;
  o.step = 1e-2;
  o.divergence_guard = 1e3;
  const Trajectory t = integrate(growth, [](const Vector&) { return Vector::Zero(1); }, Vector::Ones(1), w, o);
  EXPECT_TRUE(t.diverged);
  EXPECT_TRUE(quadratic_cost(t).infinite);
  EXPECT_TRUE(std::isinf(quadratic_cost(t).total));
}

TEST(Integrator, OptimalCostEqualsValue) {
  const ControlAffineSystem s = paper_example_system();
  const OcpWeights w = unit_weights();
  const auto tail = linearization_tail_matrix(s, w);
  ASSERT_TRUE(tail.has_value());
  for (const Vector& x0 : {vec2(1, 1), vec2(-0.5, 0.8), vec2(0.9, -1)}) {
    const Trajectory t = integrate(s, s.optimum()->controller, x0, w);
    EXPECT_NEAR(quadratic_cost(t, &*tail).total, analytic_value(x0), 1e-3);
  }
}

TEST(Weights, Validation) {
  EXPECT_THROW(OcpWeights(Matrix::Identity(2, 2), Matrix::Zero(1, 1)), InvalidArgument);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  EXPECT_THROW(OcpWeights(asym, Matrix::Identity(1, 1)), InvalidArgument);
  const OcpWeights w(vec2(2, 3).asDiagonal(), Matrix::Constant(1, 1, 0.5));
  EXPECT_DOUBLE_EQ(w.lambda_min_Qbar(), 2.0);
  EXPECT_DOUBLE_EQ(w.lambda_min_R(), 0.5);
  EXPECT_DOUBLE_EQ(w.running_cost(vec2(1, 1), Vector::Ones(1)), 0.5 * (5.0 + 0.5));
  EXPECT_THROW(w.lifted_Q(), InvalidArgument);
}

TEST(System, RejectsNonzeroDriftAtOrigin) {
  EXPECT_THROW(ControlAffineSystem("bad", 1, [](const Vector& x) { return Vector(x.array() + 1.0); },
                                   {[](const Vector&) { return Vector::Ones(1); }}),
               InvalidArgument);
  EXPECT_THROW(make_builtin_system("nope"), InvalidArgument);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  const ControlAffineSystem s = scalar_decay_system();
  const OcpWeights w(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  IntegrationOptions o;
  o.horizon = 0.02;
  o.step = 1e-2;
  const Trajectory t = integrate(s, [](const Vector&) { return Vector::Zero(1); }, Vector::Ones(1), w, o);
  std::ostringstream out;
  write_trajectory_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x1,u1,running_cost");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace koopdev
