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
#ifndef KOOPDEV_LIFTING_HPP
#define KOOPDEV_LIFTING_HPP

#include <vector>

#include "koopdev/parallel.hpp"
#include "koopdev/types.hpp"

namespace koopdev {

/// Exponent vector of one monomial, x^alpha = prod_i x_i^alpha_i.
using MultiIndex = std::vector<int>;

/**
 * Polynomial observable dictionary Psi(x) built from monomials of total degree
 * 1..max_degree. The constant monomial is never present, so Psi(0) = 0, and
 * every first-order monomial is present, so x can be read back from Psi(x)
 * with a 0/1 selector.
 *
 * Instances are immutable.
 */
class DictionaryBasis {
 public:
  /// Validates the term list: right arity, degrees in 1..max_degree, no
  /// duplicates, all first-order terms present. Throws InvalidArgument.
  DictionaryBasis(int state_dim, int max_degree, std::vector<MultiIndex> terms);

  int state_dim() const { return state_dim_; }
  int max_degree() const { return max_degree_; }
  int lifted_dim() const { return static_cast<int>(terms_.size()); }
  const std::vector<MultiIndex>& terms() const { return terms_; }

  /// z = Psi(x).
  Vector lift(const Vector& x) const;

  /// dPsi/dx, lifted_dim x state_dim.
  Matrix jacobian(const Vector& x) const;

  /// Selector C with C * lift(x) == x.
  Matrix projection_matrix() const;

  bool operator==(const DictionaryBasis& other) const {
    return state_dim_ == other.state_dim_ && max_degree_ == other.max_degree_ &&
           terms_ == other.terms_;
  }

 private:
  // powers(i, k) = x_i^k for k = 0..max_degree
  Matrix powers(const Vector& x) const;

  int state_dim_;
  int max_degree_;
  std::vector<MultiIndex> terms_;
};

/// Graded-lexicographic monomial basis: by total degree, then by descending
/// exponent of x_1, x_2, ... For n = 2, d = 2 the order is
/// x1, x2, x1^2, x1 x2, x2^2.
DictionaryBasis build_monomial_basis(int state_dim, int max_degree);

struct LipschitzEstimate {
  double value = 0.0;
  Box region;
  int grid_resolution = 0;
};

/// Max over a uniform grid (grid_resolution points per axis, endpoints
/// included) of the spectral norm of the dictionary Jacobian. OpenMP over grid
/// points.
LipschitzEstimate lipschitz_constant(const DictionaryBasis& basis, const Box& region,
                                     int grid_resolution, Parallelism par = {});

/// Largest singular value of the Jacobian at x.
double jacobian_spectral_norm(const DictionaryBasis& basis, const Vector& x);

namespace reference {
/// Single-threaded lipschitz_constant, kept as the test oracle for the
/// parallel kernel.
LipschitzEstimate lipschitz_constant(const DictionaryBasis& basis, const Box& region,
                                     int grid_resolution);
}  // namespace reference

}  // namespace koopdev

#endif  // KOOPDEV_LIFTING_HPP
