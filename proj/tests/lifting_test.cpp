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

#include "koopdev/lifting.hpp"

namespace koopdev {
namespace {

TEST(MonomialBasis, GradedLexOrder) {
  const DictionaryBasis b = build_monomial_basis(2, 2);
  const std::vector<MultiIndex> expected = {{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(b.terms(), expected);
}

TEST(MonomialBasis, SizeIsBinomialMinusOne) {
  // C(n + d, d) - 1 monomials of degree 1..d
  EXPECT_EQ(build_monomial_basis(2, 4).lifted_dim(), 14);
  EXPECT_EQ(build_monomial_basis(3, 3).lifted_dim(), 19);
  EXPECT_EQ(build_monomial_basis(1, 5).lifted_dim(), 5);
}

TEST(MonomialBasis, LiftEvaluatesMonomials) {
  const DictionaryBasis b = build_monomial_basis(2, 4);
  Vector x(2);
  x << 0.7, -1.3;
  const Vector z = b.lift(x);
  for (int k = 0; k < b.lifted_dim(); ++k) {
    const auto& a = b.terms()[k];
    EXPECT_NEAR(z[k], std::pow(x[0], a[0]) * std::pow(x[1], a[1]), 1e-14);
  }
  EXPECT_TRUE(b.lift(Vector::Zero(2)).isZero());
}

TEST(MonomialBasis, ProjectionRecoversState) {
  const DictionaryBasis b = build_monomial_basis(3, 3);
  Vector x(3);
  x << 0.2, -0.5, 1.1;
  EXPECT_EQ(b.projection_matrix() * b.lift(x), x);
}

TEST(MonomialBasis, JacobianMatchesCentralDifferences) {
  const DictionaryBasis b = build_monomial_basis(2, 4);
  Vector x(2);
  x << 0.4, -0.9;
  const Matrix J = b.jacobian(x);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vector e = Vector::Zero(2);
    e[i] = h;
    const Vector fd = (b.lift(x + e) - b.lift(x - e)) / (2 * h);
    EXPECT_LT((J.col(i) - fd).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(MonomialBasis, RejectsInvalidTerms) {
  EXPECT_THROW(DictionaryBasis(2, 2, {{1, 0}}), InvalidArgument);
  EXPECT_THROW(DictionaryBasis(2, 2, {{1, 0}, {0, 1}, {0, 0}}), InvalidArgument);
  EXPECT_THROW(DictionaryBasis(2, 2, {{1, 0}, {0, 1}, {1, 1}, {1, 1}}), InvalidArgument);
  EXPECT_THROW(DictionaryBasis(2, 2, {{1, 0}, {0, 1}, {3, 0}}), InvalidArgument);
  EXPECT_THROW(build_monomial_basis(0, 2), InvalidArgument);
}

TEST(Lipschitz, LinearBasisIsOne) {
  const LipschitzEstimate e = lipschitz_constant(build_monomial_basis(2, 1), Box::symmetric(2, 1.0), 11);
  EXPECT_NEAR(e.value, 1.0, 1e-14);
}

TEST(Lipschitz, ScalarQuadraticBasis) {
  // Psi = (x, x^2): ||J|| = sqrt(1 + 4 x^2), largest at |x| = 2
  const LipschitzEstimate e = lipschitz_constant(build_monomial_basis(1, 2), Box::symmetric(1, 2.0), 5);
  EXPECT_NEAR(e.value, std::sqrt(17.0), 1e-12);
}

TEST(Lipschitz, ParallelMatchesReference) {
  const DictionaryBasis b = build_monomial_basis(2, 4);
  const Box region = Box::symmetric(2, 1.0);
  const double par = lipschitz_constant(b, region, 41, Parallelism{4}).value;
  EXPECT_EQ(par, reference::lipschitz_constant(b, region, 41).value);
}

TEST(Lipschitz, DefaultGridValue) {
  // attained at the corner (1, 1), where J^T J = [[50, 15], [15, 50]]
  const double v = lipschitz_constant(build_monomial_basis(2, 4), Box::symmetric(2, 1.0), 201).value;
  EXPECT_NEAR(v, std::sqrt(65.0), 1e-12);
}

}  // namespace
}  // namespace koopdev
