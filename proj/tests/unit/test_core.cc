// Copyright 2026 The hetsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include "doctest.h"
#include "hetsched/core.h"

using namespace hetsched;

namespace {

constexpr TaskState kAll[] = {TaskState::kQueued, TaskState::kDispatched, TaskState::kCompleted,
                              TaskState::kFailed};

}  // namespace

TEST_CASE("validate_transition accepts exactly the lifecycle edges") {
  CHECK(validate_transition(TaskState::kQueued, TaskState::kDispatched));
  CHECK_FALSE(validate_transition(TaskState::kCompleted, TaskState::kQueued));
  CHECK(validate_transition(TaskState::kDispatched, TaskState::kQueued));

  int legal = 0;
  for (auto from : kAll) {
    for (auto to : kAll) legal += validate_transition(from, to);
  }
  CHECK(legal == 5);
  CHECK(validate_transition(TaskState::kDispatched, TaskState::kCompleted));
  CHECK(validate_transition(TaskState::kDispatched, TaskState::kFailed));
  CHECK(validate_transition(TaskState::kQueued, TaskState::kFailed));
  for (auto to : kAll) {
    CHECK_FALSE(validate_transition(TaskState::kFailed, to));
    CHECK_FALSE(validate_transition(TaskState::kCompleted, to));
  }
}

TEST_CASE("task state names round-trip") {
  for (auto s : kAll) CHECK(parse_task_state(to_string(s)) == s);
  CHECK(to_string(TaskState::kDispatched) == "DISPATCHED");
  CHECK_FALSE(parse_task_state("queued").has_value());
}

TEST_CASE("overhead_ms") {
  CHECK(overhead_ms({0, 1900, 2887, 887}) == doctest::Approx(2000));
  CHECK(overhead_ms({0, 0, 5, 5}) == 0);
  CHECK(overhead_ms({10, 20, 130, 60}) == 60);

  CHECK_THROWS_AS(overhead_ms({std::nullopt, 1, 2, 1}), MissingTimestamp);
  CHECK_THROWS_AS(overhead_ms({0, 1, std::nullopt, 1}), MissingTimestamp);
  CHECK_THROWS_AS(overhead_ms({0, 1, 2, std::nullopt}), MissingTimestamp);
  // dispatched is not needed for the overhead.
  CHECK(overhead_ms({0, std::nullopt, 9, 4}) == 5);
}

TEST_CASE("timing_consistent") {
  CHECK(timing_consistent({0, 1900, 2887, 887}));
  CHECK(timing_consistent({}));
  CHECK_FALSE(timing_consistent({10, 5, 20, 1}));
  CHECK_FALSE(timing_consistent({0, 10, 20, 11}));
  CHECK(timing_consistent({0, 10, 20, 10}));
}

TEST_CASE("illegal edges throw") {
  TaskDescriptor t;
  t.task_id = "T1";
  CHECK_THROWS_AS(t.complete(1, 0, {}), IllegalTransition);
  CHECK_THROWS_AS(t.requeue(), IllegalTransition);
  t.dispatch_to("W1", 1);
  CHECK_THROWS_AS(t.dispatch_to("W2", 2), IllegalTransition);
  CHECK_THROWS_AS(t.fail_unschedulable(2, "x"), IllegalTransition);
  t.complete(3, 1, {7});
  CHECK(t.state == TaskState::kCompleted);
  CHECK(t.output == Bytes{7});
  CHECK_THROWS_AS(t.requeue(), IllegalTransition);
}

TEST_CASE("requeue clears placement and bumps attempt") {
  TaskDescriptor t;
  t.timing.submitted_ms = 0;
  t.dispatch_to("W1", 5);
  t.requeue();
  CHECK(t.state == TaskState::kQueued);
  CHECK_FALSE(t.assigned_worker.has_value());
  CHECK_FALSE(t.timing.dispatched_ms.has_value());
  CHECK(t.attempt == 1);
  CHECK(t.timing.submitted_ms == 0);
  CHECK(t.consistent());
}

TEST_CASE("random transition sequences keep placement consistent") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 2000; ++trial) {
    TaskDescriptor t;
    t.task_id = "T";
    t.timing.submitted_ms = 0;
    Millis now = 0;
    std::uint32_t requeues = 0;
    for (int step = 0; step < 12; ++step) {
      now += 1;
      const TaskState target = kAll[rng() % 4];
      const bool legal = validate_transition(t.state, target);
      const TaskState before = t.state;
      auto apply = [&] {
        switch (target) {
          case TaskState::kDispatched:
            t.dispatch_to("W" + std::to_string(rng() % 3), now);
            break;
          case TaskState::kCompleted:
            t.complete(now, 0, {});
            break;
          case TaskState::kQueued:
            t.requeue();
            break;
          case TaskState::kFailed:
            if (before == TaskState::kQueued) {
              t.fail_unschedulable(now, "UNSCHEDULABLE");
            } else {
              t.fail(now, 0.0, "boom");
            }
            break;
        }
      };
      if (legal) {
        REQUIRE_NOTHROW(apply());
        CHECK(t.state == target);
        if (before == TaskState::kDispatched && target == TaskState::kQueued) ++requeues;
      } else {
        CHECK_THROWS_AS(apply(), IllegalTransition);
        CHECK(t.state == before);
      }
      REQUIRE(t.consistent());
      REQUIRE(timing_consistent(t.timing));
      REQUIRE(t.attempt == requeues);
    }
  }
}

TEST_CASE("validate_profile") {
  auto make = [](WorkerId id, std::int64_t mhz, bool gpu) {
    WorkerProfile p;
    p.worker_id = std::move(id);
    p.cpu_mhz = mhz;
    p.has_gpu = gpu;
    return p;
  };
  auto p = make("W1", 2400, true);
  p.gpu_cores = 384;
  p.gpu_mem_mb = 2048;
  CHECK(validate_profile(p).empty());
  p.cpu_mhz = 0;
  CHECK_FALSE(validate_profile(p).empty());

  p = make("W2", 2000, false);
  p.gpu_cores = 384;
  CHECK_FALSE(validate_profile(p).empty());
  p = make("W2", 2000, false);
  p.gpu_mem_mb = 1024;
  CHECK_FALSE(validate_profile(p).empty());

  CHECK_FALSE(validate_profile(make("", 2000, false)).empty());

  p = make("W3", 2000, false);
  p.busy = true;
  CHECK_FALSE(validate_profile(p).empty());
  p.current_task = "T1";
  CHECK(validate_profile(p).empty());
}
