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
#include "koopdev/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace koopdev {

namespace {

// Diagonal block boundaries of a real quasi-triangular Schur factor.
std::vector<Eigen::Index> block_starts(const Matrix& T) {
  std::vector<Eigen::Index> starts;
  const Eigen::Index n = T.rows();
  for (Eigen::Index k = 0; k < n;) {
    starts.push_back(k);
    k += (k + 1 < n && T(k + 1, k) != 0.0) ? 2 : 1;
  }
  starts.push_back(n);
  return starts;
}

}  // namespace

LyapunovFactor::LyapunovFactor(const Matrix& A) : schur_(A) {
  if (schur_.info() != Eigen::Success) {
    throw SolverError("LyapunovFactor: Schur decomposition failed",
                      std::numeric_limits<double>::infinity());
  }
  const Matrix& T = schur_.matrixT();
  blocks_ = block_starts(T);
  const std::size_t nb = blocks_.size() - 1;
  abscissa_ = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb; ++b) {
    const Eigen::Index k = blocks_[b];
    const double re = (blocks_[b + 1] - k == 1) ? T(k, k) : 0.5 * (T(k, k) + T(k + 1, k + 1));
    abscissa_ = std::max(abscissa_, re);
  }

  // vec(T_ii^T Y + Y T_jj) = (I_q (x) T_ii^T + T_jj^T (x) I_p) vec(Y); the
  // inverses depend only on T and are shared by every solve.
  const double scale = std::max(T.cwiseAbs().maxCoeff(), 1.0);
  block_inverses_.resize(nb * nb);
  singular_ = false;
  for (std::size_t bj = 0; bj < nb; ++bj) {
    const Eigen::Index j0 = blocks_[bj], q = blocks_[bj + 1] - j0;
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const Eigen::Index i0 = blocks_[bi], p = blocks_[bi + 1] - i0;
      SmallMatrix K = SmallMatrix::Zero(p * q, p * q);
      for (Eigen::Index c = 0; c < q; ++c) {
        K.block(c * p, c * p, p, p) += T.block(i0, i0, p, p).transpose();
        for (Eigen::Index r = 0; r < q; ++r) {
          K.block(r * p, c * p, p, p).diagonal().array() += T(j0 + c, j0 + r);
        }
      }
      const Eigen::FullPivLU<SmallMatrix> lu(K);
      const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
      if (pivot <= 1e-14 * scale) {
        singular_ = true;
        block_inverses_[bj * nb + bi] = SmallMatrix::Zero(p * q, p * q);
      } else {
        block_inverses_[bj * nb + bi] = lu.inverse();
      }
    }
  }
}

double LyapunovFactor::abscissa() const { return abscissa_; }

// With M = U T U^T the equation becomes T^T Y + Y T = -U^T Q U, solved block by
// block in column-major order (Bartels-Stewart).
Matrix LyapunovFactor::solve(const Matrix& Q) const {
  using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
  if (singular_) {
    throw SolverError("solve_lyapunov: eigenvalues symmetric about the imaginary axis",
                      std::numeric_limits<double>::infinity());
  }
  const Matrix& U = schur_.matrixU();
  const Matrix& T = schur_.matrixT();
  const Eigen::Index n = T.rows();
  const Matrix F = -(U.transpose() * Q * U);
  Matrix Y = Matrix::Zero(n, n);
  const std::size_t nb = blocks_.size() - 1;
  for (std::size_t bj = 0; bj < nb; ++bj) {
    const Eigen::Index j0 = blocks_[bj], q = blocks_[bj + 1] - j0;
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const Eigen::Index i0 = blocks_[bi], p = blocks_[bi + 1] - i0;
      SmallMatrix rhs = F.block(i0, j0, p, q);
      if (i0 > 0) {
        rhs.noalias() -= T.block(0, i0, i0, p).transpose() * Y.block(0, j0, i0, q);
      }
      if (j0 > 0) {
        rhs.noalias() -= Y.block(i0, 0, p, j0) * T.block(0, j0, j0, q);
      }
      const SmallVec v =
          block_inverses_[bj * nb + bi] * Eigen::Map<const SmallVec>(rhs.data(), p * q);
      Y.block(i0, j0, p, q) = Eigen::Map<const SmallMatrix>(v.data(), p, q);
    }
  }
  Matrix X = U * Y * U.transpose();
  return 0.5 * (X + X.transpose());
}

namespace {

struct Problem {
  const Matrix& A;
  const Matrix& B;
  const Matrix& Q;
  const Matrix& R;
  Eigen::LLT<Matrix> r_llt;
  Matrix G;  // B R^-1 B^T

  Problem(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r)
      : A(a), B(b), Q(q), R(r), r_llt(r) {
    G = B * r_llt.solve(B.transpose());
  }

  Matrix gain(const Matrix& P) const { return r_llt.solve(B.transpose() * P); }

  Matrix residual_matrix(const Matrix& P) const {
    const Matrix PB = P * B;
    Matrix res = A.transpose() * P;
    res += res.transpose().eval();
    res.noalias() -= PB * r_llt.solve(PB.transpose());
    res += Q;
    return res;
  }

  double residual(const Matrix& P) const { return residual_matrix(P).norm(); }
};

double threshold(const Matrix& Q, double tolerance) { return tolerance * std::max(1.0, Q.norm()); }

// Newton-Kleinman from gain K. Returns nullopt when K does not stabilize A at
// the first step; throws when stability is lost later or the residual stalls.
std::optional<CareSolution> newton_kleinman(const Problem& pb, Matrix K, const Matrix* start_P,
                                            const CareOptions& options) {
  const double tol = threshold(pb.Q, options.tolerance);
  Matrix P;
  double residual = std::numeric_limits<double>::infinity();
  if (start_P != nullptr) {
    P = *start_P;
    residual = pb.residual(P);
  }
  double best = residual;
  int since_improvement = 0;
  for (int it = 0; it <= options.max_iterations; ++it) {
    const LyapunovFactor closed_loop(pb.A - pb.B * K);
    if (closed_loop.abscissa() >= 0.0) {
      if (it == 0) return std::nullopt;
      throw SolverError("solve_care: Newton iterate lost closed-loop stability", residual);
    }
    if (P.size() != 0 && residual <= tol) {
      // one polishing step, kept only when it lowers the residual
      const Matrix polished = closed_loop.solve(pb.Q + K.transpose() * pb.R * K);
      const double polished_residual = pb.residual(polished);
      if (polished_residual < residual && spectral_abscissa(pb.A - pb.B * pb.gain(polished)) < 0.0) {
        return CareSolution{polished, polished_residual, it + 1};
      }
      return CareSolution{P, residual, it};
    }
    if (it == options.max_iterations) break;

    P = closed_loop.solve(pb.Q + K.transpose() * pb.R * K);
    K = pb.gain(P);
    residual = pb.residual(P);
    if (!std::isfinite(residual)) {
      throw SolverError("solve_care: non-finite residual", residual);
    }
    if (residual < best) {
      best = residual;
      since_improvement = 0;
    } else if (++since_improvement >= 5) {
      throw SolverError("solve_care: Newton-Kleinman iteration stalled", residual);
    }
  }
  throw SolverError("solve_care: iteration limit reached", residual);
}

// Continuation on A - sigma I down to sigma = 0, each level regularized so the
// shifted closed loop keeps a stability margin.
Matrix stabilizing_gain(const Problem& pb, const CareOptions& options) {
  const Eigen::Index n = pb.A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix q_aux = pb.Q + std::max(1.0, pb.Q.norm()) * I;
  double sigma = std::max(spectral_abscissa(pb.A), 0.0) + 1.0;
  Matrix K = Matrix::Zero(pb.B.cols(), n);
  for (int level = 0; level < 200; ++level) {
    const Matrix shifted = pb.A - sigma * I;
    const Problem sub(shifted, pb.B, q_aux, pb.R);
    const auto sol = newton_kleinman(sub, K, nullptr, options);
    if (!sol) {
      throw SolverError("solve_care: continuation lost a stabilizing gain",
                        std::numeric_limits<double>::infinity());
    }
    K = sub.gain(sol->P);
    const double margin = -spectral_abscissa(shifted - pb.B * K);
    if (!(margin > 0.0)) {
      throw SolverError("solve_care: pair (A, B) is not stabilizable", sol->residual_norm);
    }
    if (sigma < 0.5 * margin) return K;
    if (sigma == 0.0) break;
    sigma = std::max(0.0, sigma - 0.5 * margin);
  }
  throw SolverError("solve_care: pair (A, B) is not stabilizable",
                    std::numeric_limits<double>::infinity());
}

void validate(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DimensionError("solve_care: inconsistent matrix dimensions");
  }
  if (n == 0 || B.cols() == 0) throw DimensionError("solve_care: empty system");
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite()) {
    throw InvalidArgument("solve_care: non-finite input");
  }
  const double sym_tol = 1e-12 * std::max(1.0, R.norm());
  if ((R - R.transpose()).norm() > sym_tol) throw InvalidArgument("solve_care: R not symmetric");
  if (Eigen::LLT<Matrix>(R).info() != Eigen::Success) {
    throw InvalidArgument("solve_care: R not positive definite");
  }
}

}  // namespace

double spectral_abscissa(const Matrix& A) {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  return LyapunovFactor(A).abscissa();
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionError("solve_lyapunov: inconsistent matrix dimensions");
  }
  return LyapunovFactor(A).solve(Q);
}

double care_residual_norm(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                          const Matrix& P) {
  validate(A, B, Q, R);
  return Problem(A, B, Q, R).residual(P);
}

CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                        const CareOptions& options) {
  validate(A, B, Q, R);
  const Problem pb(A, B, Q, R);
  if (options.warm_start != nullptr && options.warm_start->rows() == A.rows() &&
      options.warm_start->cols() == A.cols()) {
    const Matrix& P0 = *options.warm_start;
    try {
      if (auto sol = newton_kleinman(pb, pb.gain(P0), &P0, options)) return *sol;
    } catch (const SolverError&) {
      // fall through to a cold start
    }
  }
  Matrix K0;
  if (spectral_abscissa(A) < 0.0) {
    K0 = Matrix::Zero(B.cols(), A.rows());
  } else {
    K0 = stabilizing_gain(pb, options);
  }
  auto sol = newton_kleinman(pb, K0, nullptr, options);
  if (!sol) {
    throw SolverError("solve_care: initial gain is not stabilizing",
                      std::numeric_limits<double>::infinity());
  }
  return *sol;
}

CareTracker::CareTracker(CareOptions options) : options_(options) { options_.warm_start = nullptr; }

void CareTracker::reset() {
  previous_.reset();
  older_.resize(0, 0);
  oldest_.resize(0, 0);
  reference_.reset();
  reference_A_.resize(0, 0);
  certificate_norm_ = 0.0;
}

void CareTracker::accept(CareSolution sol) {
  oldest_ = std::move(older_);
  if (previous_) older_ = std::move(previous_->P);
  previous_ = std::move(sol);
}

bool CareTracker::set_reference(const Matrix& closed_loop) {
  LyapunovFactor factor(closed_loop);
  if (factor.abscissa() >= 0.0) return false;
  const Eigen::Index n = closed_loop.rows();
  const Matrix X = factor.solve(Matrix::Identity(n, n));
  reference_ = std::move(factor);
  reference_A_ = closed_loop;
  certificate_norm_ = X.norm();
  return true;
}

CareSolution CareTracker::cold_solve(const Matrix& A, const Matrix& B, const Matrix& Q,
                                     const Matrix& R) {
  CareOptions opts = options_;
  if (previous_) opts.warm_start = &previous_->P;
  CareSolution sol = solve_care(A, B, Q, R, opts);
  const Problem pb(A, B, Q, R);
  set_reference(A - B * pb.gain(sol.P));
  accept(sol);
  ++full_solves_;
  return sol;
}

CareSolution CareTracker::solve(const Matrix& A, const Matrix& B, const Matrix& Q,
                                const Matrix& R) {
  validate(A, B, Q, R);
  if (!previous_ || !reference_ || previous_->P.rows() != A.rows()) return cold_solve(A, B, Q, R);

  const Problem pb(A, B, Q, R);
  const double tol = threshold(Q, options_.tolerance);
  // polynomial extrapolation from the last solutions
  Matrix P;
  if (oldest_.rows() == A.rows()) {
    P = 3.0 * (previous_->P - older_) + oldest_;
  } else if (older_.rows() == A.rows()) {
    P = 2.0 * previous_->P - older_;
  } else {
    P = previous_->P;
  }
  Matrix res = pb.residual_matrix(P);
  double residual = res.norm();
  constexpr int kMaxChordSteps = 8;
  for (int it = 0; it <= kMaxChordSteps; ++it) {
    const Matrix closed_loop = A - B * pb.gain(P);
    // X solves A_ref^T X + X A_ref = -I; A_ref + D is Hurwitz when 2||X|| ||D|| < 1.
    const double drift = 2.0 * certificate_norm_ * (closed_loop - reference_A_).norm();
    const bool refreshed = drift >= 0.5;
    if (refreshed && !set_reference(closed_loop)) break;
    if (residual <= tol) {
      if (drift < 1.0 || refreshed) {
        accept(CareSolution{P, residual, it});
        return *previous_;
      }
      break;
    }
    if (it == kMaxChordSteps) break;
    P += reference_->solve(res);
    res = pb.residual_matrix(P);
    const double next = res.norm();
    if (!std::isfinite(next)) break;
    // slow contraction: refresh the reference at the current iterate
    if (next > 0.5 * residual && !set_reference(A - B * pb.gain(P))) break;
    residual = next;
  }
  return cold_solve(A, B, Q, R);
}

}  // namespace koopdev
