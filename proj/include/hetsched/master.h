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
#include <string>
#include <vector>

#include "hetsched/protocol.h"
#include "hetsched/scheduler.h"

namespace hetsched::master {

using ConnId = std::uint64_t;

struct Outbound {
  ConnId conn;
  wire::Message msg;
};

struct DispatchRecord {
  Millis at_ms;
  TaskId task_id;
  WorkerId worker_id;
  bool requires_gpu;
  bool worker_has_gpu;
};

/// Master event handler. Owns the Scheduler and the worker/connection and
/// job bookkeeping; every entry point runs a scheduling round and returns
/// the messages to send. The caller serializes all calls.
class MasterNode {
 public:
  explicit MasterNode(SchedulerConfig config = {});

  std::vector<Outbound> on_message(ConnId conn, const wire::Message &msg, Millis now_ms);
  /// A closed worker connection removes that worker and re-queues its task.
  std::vector<Outbound> on_disconnect(ConnId conn, Millis now_ms);
  /// Eviction of silent workers, unschedulable timeouts, then a round.
  std::vector<Outbound> tick(Millis now_ms);

  const Scheduler &scheduler() const { return scheduler_; }
  const std::vector<DispatchRecord> &dispatch_log() const { return dispatch_log_; }
  std::optional<wire::JobStatusReply> job_status(const JobId &job) const;
  /// One JOB_STATUS_REPLY per job in submission order.
  std::vector<wire::JobStatusReply> snapshot() const;

 private:
  std::vector<Outbound> schedule(Millis now_ms);
  void handle_submit(ConnId conn, const wire::Submit &submit, Millis now_ms,
                     std::vector<Outbound> &out);
  void handle_result(const wire::Result &result, Millis now_ms);
  std::optional<WorkerId> worker_on(ConnId conn) const;

  Scheduler scheduler_;
  std::map<WorkerId, ConnId> worker_conn_;
  std::map<JobId, std::vector<TaskId>> jobs_;
  std::vector<JobId> job_order_;
  std::vector<DispatchRecord> dispatch_log_;
};

}  // namespace hetsched::master
