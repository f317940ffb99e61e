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
#ifndef KOOPDEV_EDMD_HPP
#define KOOPDEV_EDMD_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "koopdev/dynamics.hpp"
#include "koopdev/lifting.hpp"
#include "koopdev/parallel.hpp"

namespace koopdev {

/// One sample (x_j, x'_j, u_j) of a data trajectory.
struct Snapshot {
  int traj_id = 0;
  double t = 0.0;
  Vector x;
  Vector xdot;
  Vector u;
};

/// Piecewise-constant excitation, each level uniform in [-u_max, u_max].
struct ExcitationConfig {
  double u_max = 2.0;
  double hold = 0.1;

  std::string describe() const;
};

struct DataCollectionConfig {
  int n_traj = 40;
  double t_len = 1.0;
  double step = 0.01;
  Box init_region = Box::symmetric(2, 1.0);
  ExcitationConfig excitation;
  std::uint64_t seed = 1;
};

struct DataSet {
  int state_dim = 0;
  int input_dim = 0;
  int n_traj = 0;
  double t_len = 0.0;
  double step = 0.0;
  std::string excitation;
  std::uint64_t seed = 0;
  std::vector<Snapshot> snapshots;

  std::size_t size() const { return snapshots.size(); }
};

/**
 * Integrates n_traj trajectories (RK4, input held per step) from initial
 * states uniform in init_region under the excitation, recording x, the exact
 * derivative f(x) + g(x)u and u at every grid point t = 0, step, ..., t_len.
 * Trajectory k draws from its own RNG stream seeded by (seed, k, attempt), so
 * the result does not depend on scheduling. A diverging trajectory is
 * resampled once; a second divergence throws Error.
 */
DataSet collect_data(const ControlAffineSystem& system, const DataCollectionConfig& config,
                     Parallelism par = {});

namespace reference {
/// Single-threaded collect_data.
DataSet collect_data(const ControlAffineSystem& system, const DataCollectionConfig& config);
}  // namespace reference

/// Column-wise snapshot matrices. W0 stacks Z0, U0 and the m bilinear
/// regressor blocks (block i has columns u_j^i Psi(x_j)).
struct DataMatrices {
  Matrix Z0;         // N x T
  Matrix U0;         // m x T
  Matrix bilinear;   // mN x T
  Matrix W0;         // (N + m + mN) x T
  Matrix Z1;         // N x T, columns dPsi/dx(x_j) x'_j
};

DataMatrices assemble_matrices(const DataSet& data, const DictionaryBasis& basis);

struct Identification {
  Matrix stacked;  // [A B0 B1 ... Bm]
  Matrix A;
  Matrix B0;
  std::vector<Matrix> B;
  int rank = 0;
  int full_rank = 0;
  std::vector<std::string> warnings;
};

/// Z1 W0^+ with the pseudoinverse from an SVD truncated below rtol * sigma_max.
/// Rank deficiency is reported in `warnings`, not thrown.
Identification identify(const Matrix& W0, const Matrix& Z1, int lifted_dim, int input_dim,
                        double rtol = 1e-10);

struct ResidualReport {
  Matrix R;            // Z1 - [A B0 B1 ... Bm] W0
  Vector norms;        // column norms of R
};

ResidualReport residuals(const Matrix& stacked, const Matrix& W0, const Matrix& Z1);

struct ErrorCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
};

/**
 * Minimizes c1 + beta c2 subject to r_j <= c1 z_j + c2 u_j, c1, c2 >= 0.
 *
 * The program has two variables, so the optimum is a vertex of the feasible
 * polygon. The solver walks the vertices in increasing c2 along the boundary
 * c1(c2) = max(0, max_j (r_j - c2 u_j) / z_j) (pairwise constraint
 * intersections, then the c2-axis intercept) and stops at the first vertex
 * where the objective stops decreasing, which breaks ties toward smaller c2.
 * Throws InfeasibleError when some r_j > 0 has z_j = u_j = 0.
 */
ErrorCoefficients fit_error_coefficients(std::span<const double> residual_norms,
                                         std::span<const double> state_norms,
                                         std::span<const double> input_norms, double beta = 1.0);

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  double rms = 0.0;
};

/// Identified bilinear lifted model z' = A z + B0 u + sum_i u_i B_i z + r(z, u)
/// with ||r|| <= c1 ||z|| + c2 ||u|| on the training data.
struct LiftedBilinearModel {
  explicit LiftedBilinearModel(DictionaryBasis b) : basis(std::move(b)) {}

  DictionaryBasis basis;
  int input_dim = 0;
  Matrix A;
  Matrix B0;
  std::vector<Matrix> B;
  Matrix C;
  double c1 = 0.0;
  double c2 = 0.0;
  LipschitzEstimate lipschitz;
  ResidualStats residual_stats;
  int rank = 0;
  int full_rank = 0;
  std::size_t snapshots = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  int lifted_dim() const { return basis.lifted_dim(); }

  /// B(z) = B0 + sum_i B_i z e_i^T.
  Matrix input_matrix(const Vector& z) const;

  /// A z + B(z) u
  Vector nominal_field(const Vector& z, const Vector& u) const;
};

struct IdentifyConfig {
  Box lipschitz_region = Box::symmetric(2, 1.0);
  int lipschitz_resolution = 201;
  double beta = 1.0;
  double rtol = 1e-10;
};

/// Full pipeline: assemble, identify, residuals, coefficient fit and L_p.
LiftedBilinearModel identify_model(const DataSet& data, const DictionaryBasis& basis,
                                   const IdentifyConfig& config = {}, Parallelism par = {});

/// Data CSV: optional '#' metadata line, then header
/// traj_id,t,x1..xn,xdot1..xdotn,u1..um.
void write_dataset_csv(std::ostream& out, const DataSet& data, const std::string& config_digest);
DataSet read_dataset_csv(std::istream& in);

/// JSON model file with row-major dense matrices.
void write_model_json(std::ostream& out, const LiftedBilinearModel& model);
LiftedBilinearModel read_model_json(std::istream& in);

}  // namespace koopdev

#endif  // KOOPDEV_EDMD_HPP
