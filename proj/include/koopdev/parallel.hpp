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
#ifndef KOOPDEV_PARALLEL_HPP
#define KOOPDEV_PARALLEL_HPP

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace koopdev {

/// Degree of parallelism for the OpenMP kernels. jobs <= 0 means all cores.
struct Parallelism {
  int jobs = 0;

  int resolved() const {
#ifdef _OPENMP
    return jobs > 0 ? jobs : omp_get_max_threads();
#else
    return 1;
#endif
  }
};

/// Runs body(i) for i in [0, count) on the OpenMP team. Work items must be
/// independent; the first exception raised by any item is rethrown after the
/// loop.
template <typename Body>
void parallel_for(int count, Parallelism par, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int threads = par.resolved();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace koopdev

#endif  // KOOPDEV_PARALLEL_HPP
