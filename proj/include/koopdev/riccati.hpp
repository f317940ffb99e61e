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
#ifndef KOOPDEV_RICCATI_HPP
#define KOOPDEV_RICCATI_HPP

#include <Eigen/Eigenvalues>

#include <optional>
#include <vector>

#include "koopdev/types.hpp"

namespace koopdev {

/// Stabilizing solution of A^T P + P A - P B R^-1 B^T P + Q = 0.
struct CareSolution {
  Matrix P;
  double residual_norm = 0.0;  // Frobenius norm of the CARE residual at P
  int iterations = 0;          // Newton steps on the target equation
};

struct CareOptions {
  int max_iterations = 100;
  /// Converged when residual <= tolerance * max(1, ||Q||_F).
  double tolerance = 1e-9;
  /// Previous solution used as the Newton-Kleinman starting point when it
  /// stabilizes the pair; otherwise ignored.
  const Matrix* warm_start = nullptr;
};

/// Real Schur factorization M = U T U^T reused across Lyapunov solves
/// M^T X + X M + Q = 0 (Bartels-Stewart back-substitution over the 1x1 and
/// 2x2 diagonal blocks of T).
class LyapunovFactor {
 public:
  explicit LyapunovFactor(const Matrix& M);
  /// Largest real part of the eigenvalues of M.
  double abscissa() const;
  Matrix solve(const Matrix& Q) const;

 private:
  using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

  Eigen::RealSchur<Matrix> schur_;
  std::vector<Eigen::Index> blocks_;
  std::vector<SmallMatrix> block_inverses_;
  double abscissa_ = 0.0;
  bool singular_ = false;
};

/// Largest real part of the eigenvalues of a square matrix.
double spectral_abscissa(const Matrix& A);

/// Solves A^T X + X A + Q = 0 by Bartels-Stewart on the real Schur form of
/// A. Requires lambda_i + conj(lambda_j) != 0 for all eigenvalue pairs, which
/// holds whenever A is Hurwitz. Throws SolverError when the Sylvester
/// denominators vanish.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

/// ||A^T P + P A - P B R^-1 B^T P + Q||_F
double care_residual_norm(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                          const Matrix& P);

/**
 * Newton-Kleinman iteration for the continuous algebraic Riccati equation.
 *
 * The starting gain is K0 = 0 when A is Hurwitz. Otherwise it comes from a
 * continuation on shifted problems (A - sigma I) with sigma lowered from above
 * the spectral abscissa to zero, each level warm-started by the previous
 * gain. Every Newton step solves one Lyapunov equation with solve_lyapunov.
 *
 * Success requires the residual certificate and a Hurwitz closed loop
 * A - B R^-1 B^T P. Throws InvalidArgument for malformed inputs and
 * SolverError when the pair is not stabilizable or the iteration stalls.
 */
CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                        const CareOptions& options = {});

/**
 * Sequence of CARE solves for slowly varying (A, B), as met by state-dependent
 * Riccati control along a trajectory. Each solve starts from the previous
 * solution and refines it with chord-Newton steps whose Lyapunov operator is
 * the cached Schur factor of a reference closed loop. The closed loop of the
 * result is certified Hurwitz through the reference Lyapunov function
 * (A_ref^T X + X A_ref = -I, so A_ref + D is Hurwitz when 2||X|| ||D|| < 1).
 * Falls back to solve_care whenever refinement or certification fails, so a
 * returned solution meets the same residual and stability guarantees.
 *
 * Not thread-safe; use one tracker per trajectory.
 */
class CareTracker {
 public:
  explicit CareTracker(CareOptions options = {});

  CareSolution solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);
  void reset();

  /// Number of solves that needed the full Newton-Kleinman path.
  int full_solves() const { return full_solves_; }

 private:
  CareSolution cold_solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);
  bool set_reference(const Matrix& closed_loop);
  void accept(CareSolution sol);

  CareOptions options_;
  std::optional<CareSolution> previous_;
  Matrix older_;
  Matrix oldest_;
  std::optional<LyapunovFactor> reference_;
  Matrix reference_A_;
  double certificate_norm_ = 0.0;
  int full_solves_ = 0;
};

}  // namespace koopdev

#endif  // KOOPDEV_RICCATI_HPP
