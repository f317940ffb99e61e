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
#ifndef KOOPDEV_TYPES_HPP
#define KOOPDEV_TYPES_HPP

#include <Eigen/Dense>

#include <string>

#include "koopdev/error.hpp"

namespace koopdev {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box [lower, upper] in state space.
struct Box {
  Vector lower;
  Vector upper;

  /// [-half_width, half_width]^dim
  static Box symmetric(int dim, double half_width) {
    return Box{Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width)};
  }

  int dim() const { return static_cast<int>(lower.size()); }

  bool empty() const {
    if (lower.size() == 0 || lower.size() != upper.size()) return true;
    return ((upper - lower).array() < 0.0).any();
  }

  bool contains(const Vector& x, double tol = 0.0) const {
    if (x.size() != lower.size()) return false;
    return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
  }

  bool operator==(const Box& other) const {
    return lower.size() == other.lower.size() && lower == other.lower && upper == other.upper;
  }
};

inline void require_dim(const Vector& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(v.size()));
  }
}

}  // namespace koopdev

#endif  // KOOPDEV_TYPES_HPP
