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
#include <complex>
#include <limits>
#include <random>

#include "koopdev/riccati.hpp"

namespace koopdev {
namespace {

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  return Matrix::NullaryExpr(rows, cols, [&] { return g(rng); });
}

// Dense Kronecker solve of A^T X + X A + Q = 0.
Matrix kronecker_lyapunov(const Matrix& A, const Matrix& Q) {
  const int n = static_cast<int>(A.rows());
  const Matrix I = Matrix::Identity(n, n);
  Matrix K = Matrix::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) = A(j, i) * I;
      if (i == j) K.block(i * n, j * n, n, n) += A.transpose();
    }
  }
  const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector x = K.fullPivLu().solve(-q);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

// Smallest sigma_min([A - lambda I, B]) over eigenvalues with Re(lambda) > -0.5,
// a stabilizability margin from the PBH test.
double pbh_margin(const Matrix& A, const Matrix& B) {
  using CMatrix = Eigen::MatrixXcd;
  const Eigen::Index n = A.rows();
  const Eigen::ComplexEigenSolver<CMatrix> eig(A.cast<std::complex<double>>());
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()[i];
    if (lambda.real() <= -0.5) continue;
    CMatrix M(n, n + B.cols());
    M << A.cast<std::complex<double>>() - lambda * CMatrix::Identity(n, n),
        B.cast<std::complex<double>>();
    margin = std::min(margin, Eigen::JacobiSVD<CMatrix>(M).singularValues()(n - 1));
  }
  return margin;
}

TEST(Lyapunov, MatchesKroneckerSolve) {
  std::mt19937_64 rng(7);
  for (int n : {1, 2, 5, 9}) {
    Matrix A = random_matrix(rng, n, n);
    A -= (spectral_abscissa(A) + 0.5) * Matrix::Identity(n, n);
    const Matrix L = random_matrix(rng, n, n);
    const Matrix Q = L * L.transpose();
    const Matrix X = solve_lyapunov(A, Q);
    EXPECT_LT((X - kronecker_lyapunov(A, Q)).norm(), 1e-9 * std::max(1.0, X.norm())) << n;
    EXPECT_LT((A.transpose() * X + X * A + Q).norm(), 1e-10 * std::max(1.0, Q.norm())) << n;
  }
}

TEST(Care, ScalarClosedForm) {
  for (double a : {-2.0, -0.1, 0.0, 0.7, 3.0}) {
    for (double b : {0.5, 1.0, 2.0}) {
      const double q = 1.3, r = 0.4;
      const double expected = (a + std::sqrt(a * a + b * b * q / r)) * r / (b * b);
      const CareSolution s = solve_care(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                                        Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r));
      EXPECT_NEAR(s.P(0, 0), expected, 1e-10 * std::max(1.0, expected));
    }
  }
}

TEST(Care, DoubleIntegrator) {
  Matrix A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const CareSolution s = solve_care(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  Matrix expected(2, 2);
  expected << std::sqrt(3.0), 1, 1, std::sqrt(3.0);
  EXPECT_LT((s.P - expected).norm(), 1e-10);
}

TEST(Care, RandomInstancesCertificate) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 30; ++k) {
    const int n = 1 + static_cast<int>(rng() % 14);
    const int m = 1 + static_cast<int>(rng() % 3);
    const Matrix A = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
    const Matrix B = random_matrix(rng, n, m);
    if (pbh_margin(A, B) < 0.2) {
      --k;
      continue;
    }
    const Matrix L = random_matrix(rng, n, n);
    const Matrix Q = L * L.transpose() + 1e-3 * Matrix::Identity(n, n);
    const Matrix M = random_matrix(rng, m, m);
    const Matrix R = M * M.transpose() + 0.1 * Matrix::Identity(m, m);
    const CareSolution s = solve_care(A, B, Q, R);
    const Matrix Rinv = R.inverse();
    const Matrix res = A.transpose() * s.P + s.P * A - s.P * B * Rinv * B.transpose() * s.P + Q;
    EXPECT_LE(res.norm(), 1e-9 * std::max(1.0, Q.norm()));
    EXPECT_LE((s.P - s.P.transpose()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, s.P.norm()));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(s.P).eigenvalues().minCoeff(), 0.0);
    const Matrix Acl = A - B * Rinv * B.transpose() * s.P;
    EXPECT_LT(Eigen::EigenSolver<Matrix>(Acl).eigenvalues().real().maxCoeff(), 0.0);
  }
}

TEST(Care, UnstabilizablePairThrows) {
  const Matrix A = Matrix::Identity(2, 2);
  Matrix B(2, 1);
  B << 1, 0;
  EXPECT_THROW(solve_care(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1)), SolverError);
}

TEST(Care, RejectsMalformedInput) {
  EXPECT_THROW(solve_care(Matrix::Identity(2, 2), Matrix::Ones(3, 1), Matrix::Identity(2, 2),
                          Matrix::Identity(1, 1)),
               DimensionError);
  EXPECT_THROW(solve_care(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Identity(2, 2),
                          -Matrix::Identity(1, 1)),
               InvalidArgument);
}

TEST(CareTracker, AgreesWithColdSolvesAlongAPath) {
  std::mt19937_64 rng(13);
  const int n = 6;
  const Matrix A0 = random_matrix(rng, n, n);
  const Matrix A1 = 0.2 * random_matrix(rng, n, n);
  const Matrix B0 = random_matrix(rng, n, 1);
  const Matrix B1 = 0.2 * random_matrix(rng, n, 1);
  const Matrix Q = Matrix::Identity(n, n);
  const Matrix R = Matrix::Identity(1, 1);
  CareTracker tracker;
  for (int k = 0; k <= 200; ++k) {
    const double s = std::sin(0.05 * k);
    const Matrix A = A0 + s * A1;
    const Matrix B = B0 + s * B1;
    const CareSolution warm = tracker.solve(A, B, Q, R);
    const CareSolution cold = solve_care(A, B, Q, R);
    EXPECT_LT((warm.P - cold.P).norm(), 1e-7 * cold.P.norm()) << k;
    EXPECT_LE(care_residual_norm(A, B, Q, R, warm.P), 1e-9 * Q.norm()) << k;
  }
  EXPECT_LT(tracker.full_solves(), 20);
}

}  // namespace
}  // namespace koopdev
