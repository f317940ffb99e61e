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

#include <atomic>
#include <stdexcept>
#include <vector>

#include "koopdev/parallel.hpp"

namespace koopdev {
namespace {

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, Parallelism{4}, [&](int i) { ++hits[i]; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(50, Parallelism{3},
                            [&](int i) {
                              if (i == 17) throw std::runtime_error("boom");
                              ++done;
                            }),
               std::runtime_error);
  EXPECT_EQ(done.load(), 49);
}

TEST(ParallelFor, ZeroCountIsNoOp) {
  bool called = false;
  parallel_for(0, Parallelism{}, [&](int) { called = true; });
  EXPECT_FALSE(called);
}

TEST(Parallelism, ResolvesJobs) {
  EXPECT_EQ(Parallelism{3}.resolved(), 3);
  EXPECT_GE(Parallelism{}.resolved(), 1);
}

}  // namespace
}  // namespace koopdev
