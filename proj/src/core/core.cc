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

#include "hetsched/core.h"

#include <utility>

namespace hetsched {

std::string_view to_string(TaskState state) {
  switch (state) {
    case TaskState::kQueued:
      return "QUEUED";
    case TaskState::kDispatched:
      return "DISPATCHED";
    case TaskState::kCompleted:
      return "COMPLETED";
    case TaskState::kFailed:
      return "FAILED";
  }
  return "UNKNOWN";
}

std::optional<TaskState> parse_task_state(std::string_view text) {
  if (text == "QUEUED") return TaskState::kQueued;
  if (text == "DISPATCHED") return TaskState::kDispatched;
  if (text == "COMPLETED") return TaskState::kCompleted;
  if (text == "FAILED") return TaskState::kFailed;
  return std::nullopt;
}

bool validate_transition(TaskState from, TaskState to) {
  switch (from) {
    case TaskState::kQueued:
      return to == TaskState::kDispatched || to == TaskState::kFailed;
    case TaskState::kDispatched:
      return to == TaskState::kCompleted || to == TaskState::kFailed ||
             to == TaskState::kQueued;
    case TaskState::kCompleted:
    case TaskState::kFailed:
      return false;
  }
  return false;
}

Millis overhead_ms(const TimingRecord &timing) {
  if (!timing.submitted_ms) throw MissingTimestamp("submitted_ms missing");
  if (!timing.completed_ms) throw MissingTimestamp("completed_ms missing");
  if (!timing.exec_ms) throw MissingTimestamp("exec_ms missing");
  return (*timing.completed_ms - *timing.submitted_ms) - *timing.exec_ms;
}

bool timing_consistent(const TimingRecord &timing) {
  const auto &s = timing.submitted_ms;
  const auto &d = timing.dispatched_ms;
  const auto &c = timing.completed_ms;
  if (s && d && *s > *d) return false;
  if (d && c && *d > *c) return false;
  if (s && c && *s > *c) return false;
  if (timing.exec_ms && *timing.exec_ms < 0) return false;
  if (d && c && timing.exec_ms && *timing.exec_ms > *c - *d) return false;
  return true;
}

namespace {

void require(const TaskDescriptor &task, TaskState to) {
  if (!validate_transition(task.state, to)) {
    throw IllegalTransition("task " + task.task_id + ": " +
                            std::string(to_string(task.state)) + " -> " +
                            std::string(to_string(to)));
  }
}

}  // namespace

void TaskDescriptor::dispatch_to(const WorkerId &worker, Millis now) {
  require(*this, TaskState::kDispatched);
  state = TaskState::kDispatched;
  assigned_worker = worker;
  timing.dispatched_ms = now;
}

void TaskDescriptor::complete(Millis now, Millis exec, Bytes output_bytes) {
  require(*this, TaskState::kCompleted);
  state = TaskState::kCompleted;
  timing.completed_ms = now;
  timing.exec_ms = exec;
  output = std::move(output_bytes);
  error.reset();
}

void TaskDescriptor::fail(Millis now, std::optional<Millis> exec,
                          std::string reason) {
  require(*this, TaskState::kFailed);
  state = TaskState::kFailed;
  timing.completed_ms = now;
  timing.exec_ms = exec;
  error = std::move(reason);
}

void TaskDescriptor::requeue() {
  require(*this, TaskState::kQueued);
  state = TaskState::kQueued;
  assigned_worker.reset();
  timing.dispatched_ms.reset();
  ++attempt;
}

void TaskDescriptor::fail_unschedulable(Millis now, std::string reason) {
  if (state != TaskState::kQueued) {
    throw IllegalTransition("task " + task_id + " is not queued");
  }
  state = TaskState::kFailed;
  timing.completed_ms = now;
  error = std::move(reason);
}

bool TaskDescriptor::consistent() const {
  switch (state) {
    case TaskState::kQueued:
      return !assigned_worker && !timing.dispatched_ms;
    case TaskState::kDispatched:
    case TaskState::kCompleted:
      return assigned_worker.has_value() && timing.dispatched_ms.has_value();
    case TaskState::kFailed:
      return assigned_worker.has_value() == timing.dispatched_ms.has_value();
  }
  return false;
}

std::string validate_profile(const WorkerProfile &profile) {
  if (profile.worker_id.empty()) return "worker_id must not be empty";
  if (profile.cpu_mhz <= 0) return "cpu_mhz must be positive";
  if (!profile.has_gpu && (profile.gpu_cores || profile.gpu_mem_mb)) {
    return "gpu_cores/gpu_mem_mb require has_gpu";
  }
  if (profile.gpu_cores && *profile.gpu_cores <= 0) {
    return "gpu_cores must be positive";
  }
  if (profile.gpu_mem_mb && *profile.gpu_mem_mb <= 0) {
    return "gpu_mem_mb must be positive";
  }
  if (profile.busy != profile.current_task.has_value()) {
    return "busy must match current_task";
  }
  return {};
}

}  // namespace hetsched
