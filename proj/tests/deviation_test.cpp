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

#include "koopdev/deviation.hpp"
#include "koopdev/riccati.hpp"

namespace koopdev {
namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Matrix plant_A() {
  Matrix A(2, 2);
  A << 0.0, 1.0, 2.0, -1.0;
  return A;
}

Matrix plant_B() {
  Matrix B(2, 1);
  B << 0.0, 1.0;
  return B;
}

// Linear plant with its LQR optimum; the linear dictionary models it exactly.
ControlAffineSystem linear_plant(bool with_optimum) {
  const Matrix A = plant_A();
  const Matrix B = plant_B();
  std::optional<AnalyticOptimum> opt;
  if (with_optimum) {
    const Matrix P = solve_care(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1)).P;
    opt = AnalyticOptimum{[P](const Vector& x) { return 0.5 * x.dot(P * x); },
                          [P](const Vector& x) { return Vector(P * x); },
                          [P, B](const Vector& x) { return Vector(-B.transpose() * P * x); }};
  }
  return ControlAffineSystem("linear", 2, [A](const Vector& x) { return Vector(A * x); },
                             {[B](const Vector&) { return Vector(B.col(0)); }}, opt);
}

LiftedBilinearModel exact_model() {
  LiftedBilinearModel m(build_monomial_basis(2, 1));
  m.input_dim = 1;
  m.A = plant_A();
  m.B0 = plant_B();
  m.B = {Matrix::Zero(2, 2)};
  m.C = Matrix::Identity(2, 2);
  m.lipschitz = LipschitzEstimate{1.0, Box::symmetric(2, 1.0), 11};
  return m;
}

LiftedBilinearModel example_model() {
  DataCollectionConfig c;
  c.n_traj = 12;
  c.seed = 9;
  const DictionaryBasis basis = build_monomial_basis(2, 4);
  return identify_model(collect_data(paper_example_system(), c), basis);
}

AnalysisOptions coarse() {
  AnalysisOptions o;
  o.integration.step = 1e-2;
  return o;
}

bool same_report(const DeviationReport& a, const DeviationReport& b) {
  const auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.x0 == b.x0 && eq(a.V0_star, b.V0_star) && eq(a.grad_energy, b.grad_energy) &&
         eq(a.delta_V_max, b.delta_V_max) && eq(a.V_measured, b.V_measured) &&
         eq(a.ctrl_dev, b.ctrl_dev) && a.ok_thm5 == b.ok_thm5 && a.ok_thm6 == b.ok_thm6 &&
         a.flags == b.flags && a.failure == b.failure;
}

TEST(ValueBound, ClosedForm) {
  const double c1 = 0.2, c2 = 0.05, L = 3.0, lq = 0.5, lr = 2.0, V0 = 0.7, E = 1.3;
  const double k = std::max(2 * c1 * L / std::sqrt(lq), 2 * c2 / std::sqrt(lr));
  EXPECT_DOUBLE_EQ(value_deviation_bound(c1, c2, L, lq, lr, V0, E), k * std::sqrt(V0 * E));
  // the input term dominates here
  const double k2 = 2 * 1.0 / std::sqrt(0.1);
  EXPECT_DOUBLE_EQ(value_deviation_bound(0.01, 1.0, 1.0, 1.0, 0.1, 2.0, 0.5), k2 * 1.0);
  EXPECT_EQ(value_deviation_bound(0.0, 0.0, 5.0, 1.0, 1.0, 1.0, 1.0), 0.0);
  // max{0.4, 0.1} sqrt(0.75 * 4)
  EXPECT_NEAR(value_deviation_bound(0.1, 0.05, 2.0, 1.0, 1.0, 0.75, 4.0), 0.69282032302755, 1e-12);
}

TEST(ValueBound, RejectsInvalidInputs) {
  EXPECT_THROW(value_deviation_bound(-1, 0, 1, 1, 1, 1, 1), InvalidArgument);
  EXPECT_THROW(value_deviation_bound(1, 0, 1, 0, 1, 1, 1), InvalidArgument);
  EXPECT_THROW(value_deviation_bound(1, 0, 1, 1, 1, 1, std::nan("")), InvalidArgument);
}

TEST(ControllerBound, ClosedForm) {
  EXPECT_EQ(controller_deviation_bound(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(controller_deviation_bound(0.3, 0.1), 0.6 * (1.0 + 2.0));
  EXPECT_THROW(controller_deviation_bound(0.1, 0.0), InvalidArgument);
}

TEST(Slack, FloorAndRelative) {
  const SlackPolicy s;
  EXPECT_DOUBLE_EQ(s.slack(0.0), 0.01);
  EXPECT_DOUBLE_EQ(s.slack(1.0), 0.05);
}

TEST(GridPoints, FirstAxisSlowest) {
  const auto pts = grid_points(Box{vec2(-1, 0), vec2(1, 2)}, 3);
  ASSERT_EQ(pts.size(), 9u);
  EXPECT_EQ(pts[0], vec2(-1, 0));
  EXPECT_EQ(pts[1], vec2(-1, 1));
  EXPECT_EQ(pts[3], vec2(0, 0));
  EXPECT_EQ(pts[8], vec2(1, 2));
}

TEST(AnalyzePoint, ExactModelHasNoDeviation) {
  const ControlAffineSystem plant = linear_plant(true);
  const LiftedBilinearModel m = exact_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  AnalysisOptions o;
  o.integration.step = 1e-3;
  o.region = Box::symmetric(2, 10.0);
  const DeviationReport r = analyze_point(plant, m, w, vec2(0.5, -0.4), o);
  ASSERT_TRUE(r.failure.empty()) << r.failure;
  EXPECT_EQ(r.delta_V_max, 0.0);
  EXPECT_NEAR(r.value_gap, 0.0, 1e-12);
  EXPECT_NEAR(r.V_measured, r.V0_star, 2e-3 * r.V0_star);
  EXPECT_LT(r.ctrl_dev, 1e-20);
  EXPECT_TRUE(r.ok_thm5);
  EXPECT_TRUE(r.ok_thm6);
  EXPECT_FALSE(r.unexplained_violation());
}

TEST(AnalyzePoint, FlagsMissingOptimumAndRegionExit) {
  const ControlAffineSystem plant = linear_plant(false);
  const LiftedBilinearModel m = exact_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  const DeviationReport r = analyze_point(plant, m, w, vec2(1.5, 0.0), coarse());
  EXPECT_TRUE(r.has_flag("no_analytic_optimum"));
  EXPECT_TRUE(r.has_flag("region_exit"));
  EXPECT_TRUE(std::isnan(r.V_star));
  EXPECT_TRUE(std::isnan(r.ctrl_dev));
  EXPECT_THROW(measure_controller_deviation(plant, m, w, vec2(0.1, 0.1), coarse()),
               UnsupportedPlantError);
}

TEST(AnalyzePoint, UnexplainedViolationLogic) {
  DeviationReport r;
  r.ok_thm5 = false;
  r.ok_thm6 = true;
  EXPECT_TRUE(r.unexplained_violation());
  r.flags = {"truncation_suspect"};
  EXPECT_FALSE(r.unexplained_violation());
  r.flags = {"diverged"};
  EXPECT_TRUE(r.unexplained_violation());
  r.ok_thm5 = true;
  EXPECT_FALSE(r.unexplained_violation());
}

TEST(GridSweep, ParallelMatchesReference) {
  const ControlAffineSystem plant = paper_example_system();
  const LiftedBilinearModel m = example_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  const Box region = Box::symmetric(2, 1.0);
  const auto par = grid_sweep(plant, m, w, region, 3, coarse(), Parallelism{3});
  const auto ref = reference::grid_sweep(plant, m, w, region, 3, coarse());
  ASSERT_EQ(par.size(), ref.size());
  for (std::size_t k = 0; k < par.size(); ++k) EXPECT_TRUE(same_report(par[k], ref[k])) << k;
  const SweepSummary s = summarize(par);
  EXPECT_EQ(s.points, 9u);
  EXPECT_EQ(s.failures, 0u);
}

TEST(GridSweep, ExampleBoundsHold) {
  const ControlAffineSystem plant = paper_example_system();
  const LiftedBilinearModel m = example_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  const auto reports = grid_sweep(plant, m, w, Box::symmetric(2, 1.0), 3, coarse());
  for (const auto& r : reports) {
    if (r.x0.isZero()) continue;
    EXPECT_TRUE(r.ok_thm5) << r.x0.transpose();
    EXPECT_TRUE(r.ok_thm6) << r.x0.transpose();
    EXPECT_GT(r.V0_star, 0.0);
  }
}

TEST(SweepCsv, HeaderAndFlags) {
  DeviationReport r;
  r.x0 = vec2(0.5, -1);
  r.V_star = r.value_gap = r.ctrl_dev = std::nan("");
  r.flags = {"region_exit", "diverged"};
  std::ostringstream out;
  write_sweep_csv(out, {r}, "0123");
  std::istringstream in(out.str());
  std::string comment, header, row;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(comment.rfind("# koopdev 0.1.0", 0), 0u);
  EXPECT_NE(comment.find("0123"), std::string::npos);
  EXPECT_EQ(header,
            "x1,x2,V0,grad_energy,dVmax,V_measured,V_star,gap,ctrl_dev,ctrl_dev_bound,ok_thm5,"
            "ok_thm6,diag_flags");
  EXPECT_NE(row.find("region_exit;diverged"), std::string::npos);
  EXPECT_NE(row.find(",na,"), std::string::npos);
}

TEST(Adversarial, ZeroSampleReproducesNominalCost) {
  const LiftedBilinearModel m = example_model();
  const OcpWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1), m.basis);
  AdversarialOptions o;
  o.n_samples = 12;
  o.analysis = coarse();
  const Vector x0 = vec2(0.6, -0.8);
  const AdversarialResult a = adversarial_error_sweep(m, w, x0, o, Parallelism{1});
  const AdversarialResult b = adversarial_error_sweep(m, w, x0, o, Parallelism{3});
  ASSERT_EQ(a.samples.size(), 12u);
  EXPECT_EQ(a.samples[0].kind, "zero");
  EXPECT_EQ(a.samples[1].kind, "worst_proxy");
  EXPECT_EQ(a.samples[2].kind, "best_proxy");
  EXPECT_EQ(a.samples[3].kind, "random");
  EXPECT_EQ(a.samples[0].deviation, 0.0);
  const double independent =
      quadratic_cost(simulate_nominal(m, w, x0, o.analysis.integration)).total;
  EXPECT_NEAR(a.samples[0].cost, independent, 1e-12);
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].cost, b.samples[k].cost);
    EXPECT_GE(a.samples[k].scale, 0.0);
    EXPECT_LE(a.samples[k].scale, 1.0);
  }
  EXPECT_TRUE(a.all_within_bound);
}

}  // namespace
}  // namespace koopdev
