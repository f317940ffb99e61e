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
#include "koopdev/lifting.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <set>

namespace koopdev {

namespace {

int degree_of(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

// Appends every exponent vector of total degree `remaining` over positions
// [pos, n) in descending lexicographic order.
void enumerate_degree(int n, int pos, int remaining, MultiIndex& current,
                      std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[pos] = e;
    enumerate_degree(n, pos + 1, remaining - e, current, out);
  }
}

// Grid point with linear index `flat`, first axis varying slowest.
Vector grid_point(const Box& region, int resolution, long long flat) {
  const int n = region.dim();
  Vector x(n);
  for (int i = n - 1; i >= 0; --i) {
    const long long k = flat % resolution;
    flat /= resolution;
    const double frac = static_cast<double>(k) / (resolution - 1);
    x[i] = region.lower[i] + (region.upper[i] - region.lower[i]) * frac;
  }
  return x;
}

long long grid_size(int dim, int resolution) {
  long long total = 1;
  for (int i = 0; i < dim; ++i) total *= resolution;
  return total;
}

void check_lipschitz_args(const DictionaryBasis& basis, const Box& region, int resolution) {
  if (region.empty()) throw InvalidArgument("lipschitz_constant: empty region");
  if (region.dim() != basis.state_dim()) {
    throw DimensionError("lipschitz_constant: region dimension does not match basis");
  }
  if (resolution < 2) throw InvalidArgument("lipschitz_constant: grid_resolution must be >= 2");
}

}  // namespace

DictionaryBasis::DictionaryBasis(int state_dim, int max_degree, std::vector<MultiIndex> terms)
    : state_dim_(state_dim), max_degree_(max_degree), terms_(std::move(terms)) {
  if (state_dim_ < 1) throw InvalidArgument("DictionaryBasis: state_dim must be >= 1");
  if (max_degree_ < 1) throw InvalidArgument("DictionaryBasis: max_degree must be >= 1");
  std::set<MultiIndex> seen;
  for (const auto& alpha : terms_) {
    if (static_cast<int>(alpha.size()) != state_dim_) {
      throw InvalidArgument("DictionaryBasis: multi-index arity differs from state_dim");
    }
    if (std::any_of(alpha.begin(), alpha.end(), [](int e) { return e < 0; })) {
      throw InvalidArgument("DictionaryBasis: negative exponent");
    }
    const int deg = degree_of(alpha);
    if (deg < 1) throw InvalidArgument("DictionaryBasis: constant term not allowed");
    if (deg > max_degree_) throw InvalidArgument("DictionaryBasis: term exceeds max_degree");
    if (!seen.insert(alpha).second) throw InvalidArgument("DictionaryBasis: duplicate term");
  }
  for (int i = 0; i < state_dim_; ++i) {
    MultiIndex unit(state_dim_, 0);
    unit[i] = 1;
    if (!seen.count(unit)) {
      throw InvalidArgument("DictionaryBasis: missing first-order term x" + std::to_string(i + 1));
    }
  }
}

Matrix DictionaryBasis::powers(const Vector& x) const {
  Matrix p(state_dim_, max_degree_ + 1);
  for (int i = 0; i < state_dim_; ++i) {
    p(i, 0) = 1.0;
    for (int k = 1; k <= max_degree_; ++k) p(i, k) = p(i, k - 1) * x[i];
  }
  return p;
}

Vector DictionaryBasis::lift(const Vector& x) const {
  require_dim(x, state_dim_, "lift");
  const Matrix p = powers(x);
  Vector z(lifted_dim());
  for (int k = 0; k < lifted_dim(); ++k) {
    double v = 1.0;
    for (int i = 0; i < state_dim_; ++i) v *= p(i, terms_[k][i]);
    z[k] = v;
  }
  return z;
}

Matrix DictionaryBasis::jacobian(const Vector& x) const {
  require_dim(x, state_dim_, "jacobian");
  const Matrix p = powers(x);
  Matrix J = Matrix::Zero(lifted_dim(), state_dim_);
  for (int k = 0; k < lifted_dim(); ++k) {
    const MultiIndex& alpha = terms_[k];
    for (int i = 0; i < state_dim_; ++i) {
      if (alpha[i] == 0) continue;
      double v = alpha[i] * p(i, alpha[i] - 1);
      for (int j = 0; j < state_dim_; ++j) {
        if (j != i) v *= p(j, alpha[j]);
      }
      J(k, i) = v;
    }
  }
  return J;
}

Matrix DictionaryBasis::projection_matrix() const {
  Matrix C = Matrix::Zero(state_dim_, lifted_dim());
  for (int k = 0; k < lifted_dim(); ++k) {
    if (degree_of(terms_[k]) != 1) continue;
    const auto it = std::find(terms_[k].begin(), terms_[k].end(), 1);
    C(it - terms_[k].begin(), k) = 1.0;
  }
  return C;
}

DictionaryBasis build_monomial_basis(int state_dim, int max_degree) {
  if (state_dim < 1) throw InvalidArgument("build_monomial_basis: state_dim must be >= 1");
  if (max_degree < 1) throw InvalidArgument("build_monomial_basis: max_degree must be >= 1");
  std::vector<MultiIndex> terms;
  MultiIndex current(state_dim, 0);
  for (int deg = 1; deg <= max_degree; ++deg) enumerate_degree(state_dim, 0, deg, current, terms);
  return DictionaryBasis(state_dim, max_degree, std::move(terms));
}

double jacobian_spectral_norm(const DictionaryBasis& basis, const Vector& x) {
  const Matrix J = basis.jacobian(x);
  Eigen::JacobiSVD<Matrix> svd(J);
  return svd.singularValues()(0);
}

LipschitzEstimate lipschitz_constant(const DictionaryBasis& basis, const Box& region,
                                     int grid_resolution, Parallelism par) {
  check_lipschitz_args(basis, region, grid_resolution);
  const long long total = grid_size(region.dim(), grid_resolution);
  double best = 0.0;
  const int threads = par.resolved();
#pragma omp parallel for reduction(max : best) schedule(static) num_threads(threads)
  for (long long flat = 0; flat < total; ++flat) {
    best = std::max(best, jacobian_spectral_norm(basis, grid_point(region, grid_resolution, flat)));
  }
  return LipschitzEstimate{best, region, grid_resolution};
}

namespace reference {

LipschitzEstimate lipschitz_constant(const DictionaryBasis& basis, const Box& region,
                                     int grid_resolution) {
  check_lipschitz_args(basis, region, grid_resolution);
  const long long total = grid_size(region.dim(), grid_resolution);
  double best = 0.0;
  for (long long flat = 0; flat < total; ++flat) {
    best = std::max(best, jacobian_spectral_norm(basis, grid_point(region, grid_resolution, flat)));
  }
  return LipschitzEstimate{best, region, grid_resolution};
}

}  // namespace reference

}  // namespace koopdev
