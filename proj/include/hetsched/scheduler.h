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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetsched/core.h"

namespace hetsched {

/// Registered workers split into a GPU ring and a CPU ring. Each ring is
/// ordered by descending cpu_mhz, ties by ascending worker_id, and keeps a
/// cursor naming the next position round-robin selection will try.
class MembershipCatalog {
 public:
  enum class Ring { kGpu, kCpu };

  /// Inserts (or replaces) a profile. The cursor of the affected ring keeps
  /// pointing at the same pre-existing worker.
  void insert(WorkerProfile profile);
  /// Removes a worker; returns its profile when it was present.
  std::optional<WorkerProfile> erase(const WorkerId &id);

  bool contains(const WorkerId &id) const { return workers_.count(id) != 0; }
  WorkerProfile *find(const WorkerId &id);
  const WorkerProfile *find(const WorkerId &id) const;

  const std::vector<WorkerId> &ring(Ring which) const {
    return which == Ring::kGpu ? gpu_ring_ : cpu_ring_;
  }
  std::size_t cursor(Ring which) const {
    return which == Ring::kGpu ? gpu_cursor_ : cpu_cursor_;
  }
  const std::map<WorkerId, WorkerProfile> &workers() const { return workers_; }
  std::size_t size() const { return workers_.size(); }

  /// Advances the ring cursor cyclically from its current position and
  /// returns the first idle worker, moving the cursor past it. Returns
  /// nullopt, cursor untouched, when every worker in the ring is busy.
  std::optional<WorkerId> next_idle(Ring which);

  /// Checks ring partition, ordering and cursor bounds.
  bool consistent() const;

 private:
  std::vector<WorkerId> &ring_ref(Ring which) {
    return which == Ring::kGpu ? gpu_ring_ : cpu_ring_;
  }
  std::size_t &cursor_ref(Ring which) {
    return which == Ring::kGpu ? gpu_cursor_ : cpu_cursor_;
  }
  bool ranks_before(const WorkerId &a, const WorkerId &b) const;

  std::map<WorkerId, WorkerProfile> workers_;
  std::vector<WorkerId> gpu_ring_;
  std::vector<WorkerId> cpu_ring_;
  std::size_t gpu_cursor_ = 0;
  std::size_t cpu_cursor_ = 0;
};

struct SchedulerConfig {
  Millis heartbeat_interval_ms = 2000;
  int liveness_misses = 3;
  Millis unschedulable_timeout_ms = 60000;
  std::string listen_address = "0.0.0.0:7070";

  Millis eviction_window_ms() const {
    return heartbeat_interval_ms * liveness_misses;
  }
  /// Empty when valid.
  std::string validate() const;
};

struct Assignment {
  TaskId task_id;
  WorkerId worker_id;

  bool operator==(const Assignment &) const = default;
};

struct TransitionEvent {
  TaskId task_id;
  TaskState from;
  TaskState to;
  Millis at_ms;
  std::optional<WorkerId> worker;
};

struct RegistrationResult {
  bool accepted = false;
  std::string reason;
  /// Task the previous incarnation of this worker id was running.
  std::optional<TaskId> orphaned;
};

enum class HeartbeatResult { kUpdated, kStale, kNotRegistered };

enum class CompletionResult { kRecorded, kUnknownTask, kNotDispatched, kWrongWorker };

inline constexpr std::string_view kUnschedulableError = "UNSCHEDULABLE";

/// Master-side scheduling state: membership catalog, FCFS queue of task ids,
/// and the task table. Not thread-safe; owned by one event loop.
class Scheduler {
 public:
  explicit Scheduler(SchedulerConfig config = {});

  const SchedulerConfig &config() const { return config_; }

  RegistrationResult register_worker(WorkerProfile profile, Millis now_ms);
  HeartbeatResult heartbeat(const WorkerId &id, Millis ts_ms, bool busy);
  /// Removes workers silent for longer than the eviction window and
  /// re-queues what they were running. Returns the re-queued task ids.
  std::vector<TaskId> evict_stale(Millis now_ms);
  /// Same effect as eviction, for one worker (e.g. its connection closed).
  std::vector<TaskId> remove_worker(const WorkerId &id, Millis now_ms);

  /// Returns false (state unchanged) for a duplicate id or a task that is
  /// not QUEUED.
  bool enqueue_task(TaskDescriptor task, Millis now_ms);

  std::vector<Assignment> schedule_round(Millis now_ms);

  CompletionResult complete_task(const TaskId &task_id, const WorkerId &reporter,
                                 bool ok, Millis exec_ms, Bytes output,
                                 std::string error, Millis now_ms);

  const MembershipCatalog &catalog() const { return catalog_; }
  const std::deque<TaskId> &queue() const { return queue_; }
  const std::map<TaskId, TaskDescriptor> &tasks() const { return tasks_; }
  const TaskDescriptor *task(const TaskId &id) const;

  const std::vector<TransitionEvent> &transitions() const { return transitions_; }

  /// Queue/catalog cross-checks: FCFS ordering, queue holds only QUEUED
  /// tasks, worker busy flags agree with dispatched tasks.
  bool consistent() const;

 private:
  void record(const TaskDescriptor &task, TaskState from, Millis now,
              std::optional<WorkerId> worker = std::nullopt);
  void reinsert_fcfs(const TaskId &id);
  std::optional<TaskId> orphan_current_task(WorkerProfile &profile, Millis now);

  SchedulerConfig config_;
  MembershipCatalog catalog_;
  std::deque<TaskId> queue_;
  std::map<TaskId, TaskDescriptor> tasks_;
  std::vector<TransitionEvent> transitions_;
  // Enqueue order; re-queued tasks go back to their original slot.
  std::map<TaskId, std::uint64_t> enqueue_seq_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace hetsched
