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
#ifndef KOOPDEV_ERROR_HPP
#define KOOPDEV_ERROR_HPP

#include <stdexcept>
#include <string>

namespace koopdev {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside its documented domain (negative weight, empty region, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes that do not agree with each other.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its certificate.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// Error-coefficient program has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Operation requires analytic optimal quantities the plant does not provide.
class UnsupportedPlantError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace koopdev

#endif  // KOOPDEV_ERROR_HPP
