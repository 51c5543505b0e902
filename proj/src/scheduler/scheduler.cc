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

#include "hetsched/scheduler.h"

#include <algorithm>
#include <set>
#include <utility>

namespace hetsched {

std::string SchedulerConfig::validate() const {
  if (heartbeat_interval_ms <= 0) return "heartbeat_interval_ms must be positive";
  if (liveness_misses <= 0) return "liveness_misses must be positive";
  if (unschedulable_timeout_ms <= 0) return "unschedulable_timeout_ms must be positive";
  return {};
}

Scheduler::Scheduler(SchedulerConfig config) : config_(std::move(config)) {
  if (auto why = config_.validate(); !why.empty()) {
    throw std::invalid_argument(why);
  }
}

const TaskDescriptor *Scheduler::task(const TaskId &id) const {
  auto it = tasks_.find(id);
  return it == tasks_.end() ? nullptr : &it->second;
}

void Scheduler::record(const TaskDescriptor &task, TaskState from, Millis now,
                       std::optional<WorkerId> worker) {
  transitions_.push_back({task.task_id, from, task.state, now, std::move(worker)});
}

void Scheduler::reinsert_fcfs(const TaskId &id) {
  const auto seq = enqueue_seq_.at(id);
  auto pos = std::find_if(queue_.begin(), queue_.end(), [&](const TaskId &other) {
    return enqueue_seq_.at(other) > seq;
  });
  queue_.insert(pos, id);
}

std::optional<TaskId> Scheduler::orphan_current_task(WorkerProfile &profile,
                                                     Millis now) {
  if (!profile.current_task) return std::nullopt;
  TaskId id = *profile.current_task;
  profile.current_task.reset();
  profile.busy = false;
  auto it = tasks_.find(id);
  if (it == tasks_.end() || it->second.state != TaskState::kDispatched ||
      it->second.assigned_worker != profile.worker_id) {
    return std::nullopt;
  }
  auto &task = it->second;
  task.requeue();
  record(task, TaskState::kDispatched, now, profile.worker_id);
  reinsert_fcfs(id);
  return id;
}

RegistrationResult Scheduler::register_worker(WorkerProfile profile, Millis now_ms) {
  RegistrationResult result;
  profile.busy = false;
  profile.current_task.reset();
  if (auto why = validate_profile(profile); !why.empty()) {
    result.reason = std::move(why);
    return result;
  }
  if (auto *old = catalog_.find(profile.worker_id)) {
    result.orphaned = orphan_current_task(*old, now_ms);
  }
  profile.last_heartbeat_ms = now_ms;
  catalog_.insert(std::move(profile));
  result.accepted = true;
  return result;
}

HeartbeatResult Scheduler::heartbeat(const WorkerId &id, Millis ts_ms,
                                     bool /*busy*/) {
  // The reported busy flag is advisory; the master's own dispatch record is
  // authoritative for placement.
  auto *profile = catalog_.find(id);
  if (profile == nullptr) return HeartbeatResult::kNotRegistered;
  if (ts_ms < profile->last_heartbeat_ms) return HeartbeatResult::kStale;
  profile->last_heartbeat_ms = ts_ms;
  return HeartbeatResult::kUpdated;
}

std::vector<TaskId> Scheduler::remove_worker(const WorkerId &id, Millis now_ms) {
  std::vector<TaskId> orphaned;
  if (auto *profile = catalog_.find(id)) {
    if (auto task = orphan_current_task(*profile, now_ms)) {
      orphaned.push_back(std::move(*task));
    }
    catalog_.erase(id);
  }
  return orphaned;
}

std::vector<TaskId> Scheduler::evict_stale(Millis now_ms) {
  std::vector<WorkerId> stale;
  for (const auto &[id, profile] : catalog_.workers()) {
    if (now_ms - profile.last_heartbeat_ms > config_.eviction_window_ms()) {
      stale.push_back(id);
    }
  }
  std::vector<TaskId> orphaned;
  for (const auto &id : stale) {
    auto lost = remove_worker(id, now_ms);
    orphaned.insert(orphaned.end(), lost.begin(), lost.end());
  }
  return orphaned;
}

bool Scheduler::enqueue_task(TaskDescriptor task, Millis now_ms) {
  if (task.state != TaskState::kQueued || task.task_id.empty()) return false;
  if (tasks_.count(task.task_id) != 0) return false;
  task.assigned_worker.reset();
  task.timing = {};
  task.timing.submitted_ms = now_ms;
  const TaskId id = task.task_id;
  enqueue_seq_[id] = next_seq_++;
  tasks_.emplace(id, std::move(task));
  queue_.push_back(id);
  return true;
}

std::vector<Assignment> Scheduler::schedule_round(Millis now_ms) {
  using Ring = MembershipCatalog::Ring;
  std::vector<Assignment> assignments;
  bool exhausted_gpu = false;
  bool exhausted_cpu = false;

  for (auto it = queue_.begin(); it != queue_.end();) {
    auto &task = tasks_.at(*it);
    const bool gpu_ring_empty = catalog_.ring(Ring::kGpu).empty();

    if (task.requires_gpu && gpu_ring_empty &&
        now_ms - task.timing.submitted_ms.value_or(now_ms) >
            config_.unschedulable_timeout_ms) {
      task.fail_unschedulable(now_ms, std::string(kUnschedulableError));
      record(task, TaskState::kQueued, now_ms);
      it = queue_.erase(it);
      continue;
    }

    Ring ring = Ring::kGpu;
    if (!task.requires_gpu && !catalog_.ring(Ring::kCpu).empty()) ring = Ring::kCpu;
    bool &exhausted = ring == Ring::kGpu ? exhausted_gpu : exhausted_cpu;

    std::optional<WorkerId> worker;
    if (!exhausted) {
      worker = catalog_.next_idle(ring);
      if (!worker) exhausted = true;
    }
    if (!worker) {
      ++it;
      continue;
    }

    auto *profile = catalog_.find(*worker);
    profile->busy = true;
    profile->current_task = task.task_id;
    task.dispatch_to(*worker, now_ms);
    record(task, TaskState::kQueued, now_ms, *worker);
    assignments.push_back({task.task_id, *worker});
    it = queue_.erase(it);
  }
  return assignments;
}

CompletionResult Scheduler::complete_task(const TaskId &task_id,
                                          const WorkerId &reporter, bool ok,
                                          Millis exec_ms, Bytes output,
                                          std::string error, Millis now_ms) {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return CompletionResult::kUnknownTask;
  auto &task = it->second;
  if (task.state != TaskState::kDispatched) return CompletionResult::kNotDispatched;
  if (task.assigned_worker != reporter) return CompletionResult::kWrongWorker;

  // Worker-measured exec time cannot exceed the master-observed dispatch
  // window; clamp so the timing record stays ordered across clocks.
  const Millis window = now_ms - task.timing.dispatched_ms.value_or(now_ms);
  exec_ms = std::clamp(exec_ms, Millis{0}, std::max(window, Millis{0}));

  if (ok) {
    task.complete(now_ms, exec_ms, std::move(output));
  } else {
    task.fail(now_ms, exec_ms, std::move(error));
  }
  record(task, TaskState::kDispatched, now_ms, reporter);

  if (auto *profile = catalog_.find(reporter);
      profile != nullptr && profile->current_task == task_id) {
    profile->current_task.reset();
    profile->busy = false;
  }
  return CompletionResult::kRecorded;
}

bool Scheduler::consistent() const {
  if (!catalog_.consistent()) return false;
  std::set<TaskId> queued;
  std::optional<std::uint64_t> last_seq;
  std::optional<Millis> last_submitted;
  for (const auto &id : queue_) {
    const auto *t = task(id);
    if (t == nullptr || t->state != TaskState::kQueued || !t->consistent()) return false;
    if (!queued.insert(id).second) return false;
    const auto seq = enqueue_seq_.at(id);
    if (last_seq && seq < *last_seq) return false;
    last_seq = seq;
    if (last_submitted && *t->timing.submitted_ms < *last_submitted) return false;
    last_submitted = t->timing.submitted_ms;
  }
  for (const auto &[id, profile] : catalog_.workers()) {
    if (profile.busy != profile.current_task.has_value()) return false;
    if (!profile.current_task) continue;
    if (queued.count(*profile.current_task) != 0) return false;
    const auto *t = task(*profile.current_task);
    if (t == nullptr || t->state != TaskState::kDispatched ||
        t->assigned_worker != id) {
      return false;
    }
  }
  for (const auto &[id, t] : tasks_) {
    if (!t.consistent()) return false;
    if (t.state == TaskState::kQueued && queued.count(id) == 0) return false;
  }
  return true;
}

}  // namespace hetsched
