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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hetsched {

/// Milliseconds on a per-process monotonic clock. Fractional values carry
/// sub-millisecond resolution; cross-process comparison is never needed.
using Millis = double;

using Bytes = std::vector<std::uint8_t>;
using TaskId = std::string;
using JobId = std::string;
using WorkerId = std::string;
using Params = std::map<std::string, std::string>;

enum class TaskState { kQueued, kDispatched, kCompleted, kFailed };

std::string_view to_string(TaskState state);
std::optional<TaskState> parse_task_state(std::string_view text);

/// True iff `from -> to` is one of the lifecycle edges:
/// QUEUED->DISPATCHED, DISPATCHED->{COMPLETED, FAILED, QUEUED},
/// QUEUED->FAILED.
bool validate_transition(TaskState from, TaskState to);

class MissingTimestamp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllegalTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct TimingRecord {
  std::optional<Millis> submitted_ms;
  std::optional<Millis> dispatched_ms;
  std::optional<Millis> completed_ms;
  std::optional<Millis> exec_ms;

  bool operator==(const TimingRecord &) const = default;
};

/// (completed - submitted) - exec. Throws MissingTimestamp when any of the
/// three fields is absent.
Millis overhead_ms(const TimingRecord &timing);

/// Checks submitted <= dispatched <= completed and
/// exec <= completed - dispatched over the fields that are present.
bool timing_consistent(const TimingRecord &timing);

struct TaskDescriptor {
  TaskId task_id;
  JobId job_id;
  std::string kind;
  bool requires_gpu = false;
  Params params;
  Bytes payload;
  TaskState state = TaskState::kQueued;
  std::optional<WorkerId> assigned_worker;
  TimingRecord timing;
  std::uint32_t attempt = 0;
  std::optional<Bytes> output;
  std::optional<std::string> error;

  bool operator==(const TaskDescriptor &) const = default;

  // Lifecycle edges. Each throws IllegalTransition when the current state
  // does not allow the move.
  void dispatch_to(const WorkerId &worker, Millis now);
  void complete(Millis now, Millis exec_ms, Bytes output_bytes);
  void fail(Millis now, std::optional<Millis> exec_ms, std::string reason);
  void requeue();
  void fail_unschedulable(Millis now, std::string reason);

  /// assigned_worker is held exactly while the task is, or was, on a worker.
  bool consistent() const;
};

struct WorkerProfile {
  WorkerId worker_id;
  std::int64_t cpu_mhz = 0;
  bool has_gpu = false;
  std::optional<std::int64_t> gpu_cores;
  std::optional<std::int64_t> gpu_mem_mb;
  Millis last_heartbeat_ms = 0;
  bool busy = false;
  std::optional<TaskId> current_task;

  bool operator==(const WorkerProfile &) const = default;
};

/// Empty string when the profile is well formed, otherwise the first
/// violated constraint.
std::string validate_profile(const WorkerProfile &profile);

}  // namespace hetsched
