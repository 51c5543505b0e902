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

#include "hetsched/master.h"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace hetsched::master {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

wire::TaskStatus status_of(const TaskDescriptor &task) {
  wire::TaskStatus s;
  s.task_id = task.task_id;
  s.state = task.state;
  s.worker_id = task.assigned_worker;
  s.submitted_ms = task.timing.submitted_ms;
  s.dispatched_ms = task.timing.dispatched_ms;
  s.completed_ms = task.timing.completed_ms;
  s.exec_ms = task.timing.exec_ms;
  s.output = task.output;
  s.error = task.error;
  return s;
}

}  // namespace

MasterNode::MasterNode(SchedulerConfig config) : scheduler_(std::move(config)) {}

std::optional<WorkerId> MasterNode::worker_on(ConnId conn) const {
  for (const auto &[id, c] : worker_conn_) {
    if (c == conn) return id;
  }
  return std::nullopt;
}

std::vector<Outbound> MasterNode::on_message(ConnId conn, const wire::Message &msg,
                                             Millis now_ms) {
  std::vector<Outbound> out;
  std::visit(
      Overloaded{
          [&](const wire::Register &r) {
            WorkerProfile profile;
            profile.worker_id = r.worker_id;
            profile.cpu_mhz = r.cpu_mhz;
            profile.has_gpu = r.has_gpu;
            profile.gpu_cores = r.gpu_cores;
            profile.gpu_mem_mb = r.gpu_mem_mb;
            auto result = scheduler_.register_worker(std::move(profile), now_ms);
            wire::RegisterAck ack;
            ack.accepted = result.accepted;
            ack.heartbeat_interval_ms =
                static_cast<std::int64_t>(scheduler_.config().heartbeat_interval_ms);
            if (!result.accepted) {
              ack.reason = result.reason;
              spdlog::warn("rejected worker '{}': {}", r.worker_id, result.reason);
            } else {
              worker_conn_[r.worker_id] = conn;
              spdlog::info("worker '{}' registered ({} MHz, {})", r.worker_id, r.cpu_mhz,
                           r.has_gpu ? "gpu" : "cpu");
            }
            out.push_back({conn, std::move(ack)});
          },
          [&](const wire::Heartbeat &h) {
            // Liveness is judged on the master's clock; the worker's ts_ms
            // is informational.
            const auto result = scheduler_.heartbeat(h.worker_id, now_ms, h.busy);
            wire::HeartbeatAck ack;
            ack.status = result == HeartbeatResult::kNotRegistered
                             ? wire::HeartbeatStatus::kNotRegistered
                             : wire::HeartbeatStatus::kOk;
            out.push_back({conn, ack});
          },
          [&](const wire::Result &r) { handle_result(r, now_ms); },
          [&](const wire::Submit &s) { handle_submit(conn, s, now_ms, out); },
          [&](const wire::JobStatus &s) {
            if (auto reply = job_status(s.job_id)) {
              out.push_back({conn, std::move(*reply)});
            } else {
              out.push_back({conn, wire::Error{"UNKNOWN_JOB", "no job '" + s.job_id + "'"}});
            }
          },
          [&](const auto &other) {
            out.push_back({conn, wire::Error{std::string(wire::kProtocolErrorCode),
                                             "unexpected message type " +
                                                 std::string(wire::type_name(other))}});
          },
      },
      msg);
  auto dispatches = schedule(now_ms);
  out.insert(out.end(), std::make_move_iterator(dispatches.begin()),
             std::make_move_iterator(dispatches.end()));
  return out;
}

void MasterNode::handle_submit(ConnId conn, const wire::Submit &submit, Millis now_ms,
                               std::vector<Outbound> &out) {
  auto &job_tasks = jobs_[submit.job_id];
  if (job_tasks.empty() &&
      std::find(job_order_.begin(), job_order_.end(), submit.job_id) == job_order_.end()) {
    job_order_.push_back(submit.job_id);
  }
  std::int64_t accepted = 0;
  for (const auto &spec : submit.tasks) {
    if (spec.kind.empty()) continue;
    TaskDescriptor task;
    task.task_id = spec.task_id;
    task.job_id = submit.job_id;
    task.kind = spec.kind;
    task.requires_gpu = spec.requires_gpu;
    task.params = spec.params;
    task.payload = spec.payload;
    if (scheduler_.enqueue_task(std::move(task), now_ms)) {
      job_tasks.push_back(spec.task_id);
      ++accepted;
    } else {
      spdlog::warn("job '{}': rejected duplicate task id '{}'", submit.job_id, spec.task_id);
    }
  }
  out.push_back({conn, wire::SubmitAck{submit.job_id, accepted}});
}

void MasterNode::handle_result(const wire::Result &r, Millis now_ms) {
  const bool ok = r.status == wire::ResultStatus::kOk;
  const auto outcome =
      scheduler_.complete_task(r.task_id, r.worker_id, ok, r.exec_ms, r.output.value_or(Bytes{}),
                               r.error.value_or(""), now_ms);
  switch (outcome) {
    case CompletionResult::kRecorded:
      break;
    case CompletionResult::kUnknownTask:
      spdlog::warn("result for unknown task '{}' from '{}'", r.task_id, r.worker_id);
      break;
    case CompletionResult::kNotDispatched:
    case CompletionResult::kWrongWorker:
      spdlog::warn("ignoring stale result for task '{}' from '{}'", r.task_id, r.worker_id);
      break;
  }
}

std::vector<Outbound> MasterNode::on_disconnect(ConnId conn, Millis now_ms) {
  if (auto id = worker_on(conn)) {
    worker_conn_.erase(*id);
    for (const auto &task : scheduler_.remove_worker(*id, now_ms)) {
      spdlog::warn("worker '{}' disconnected; re-queued '{}'", *id, task);
    }
  }
  return schedule(now_ms);
}

std::vector<Outbound> MasterNode::tick(Millis now_ms) {
  for (const auto &task : scheduler_.evict_stale(now_ms)) {
    spdlog::warn("re-queued '{}' after worker eviction", task);
  }
  for (auto it = worker_conn_.begin(); it != worker_conn_.end();) {
    it = scheduler_.catalog().contains(it->first) ? std::next(it) : worker_conn_.erase(it);
  }
  return schedule(now_ms);
}

std::vector<Outbound> MasterNode::schedule(Millis now_ms) {
  std::vector<Outbound> out;
  for (const auto &a : scheduler_.schedule_round(now_ms)) {
    const auto &task = *scheduler_.task(a.task_id);
    const auto *profile = scheduler_.catalog().find(a.worker_id);
    dispatch_log_.push_back(
        {now_ms, a.task_id, a.worker_id, task.requires_gpu, profile && profile->has_gpu});
    auto conn = worker_conn_.find(a.worker_id);
    if (conn == worker_conn_.end()) {
      // Reachable only if a worker registered through a path that did not
      // bind a connection; eviction will recover the task.
      spdlog::error("no connection for worker '{}'", a.worker_id);
      continue;
    }
    out.push_back({conn->second, wire::Dispatch{task.task_id, task.kind, task.requires_gpu,
                                                task.params, task.payload}});
  }
  return out;
}

std::optional<wire::JobStatusReply> MasterNode::job_status(const JobId &job) const {
  auto it = jobs_.find(job);
  if (it == jobs_.end()) return std::nullopt;
  wire::JobStatusReply reply;
  reply.job_id = job;
  for (const auto &id : it->second) reply.tasks.push_back(status_of(*scheduler_.task(id)));
  return reply;
}

std::vector<wire::JobStatusReply> MasterNode::snapshot() const {
  std::vector<wire::JobStatusReply> out;
  for (const auto &job : job_order_) out.push_back(*job_status(job));
  return out;
}

}  // namespace hetsched::master
