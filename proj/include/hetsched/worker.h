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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetsched/core.h"
#include "hetsched/protocol.h"

namespace hetsched::worker {

/// A named workload. Must be a pure function of (params, payload).
using Executor = std::function<Bytes(const Params &, std::span<const std::uint8_t>)>;

class ExecutorRegistry {
 public:
  void add(std::string kind, Executor executor);
  const Executor *find(const std::string &kind) const;
  std::vector<std::string> kinds() const;

 private:
  std::map<std::string, Executor> executors_;
};

/// Registry with the workloads every agent ships: "noop", "sleep"
/// (duration_ms), "sobel_seq" and "sobel_par" (lane_count, defaulting to
/// `default_lanes`).
ExecutorRegistry builtin_registry(std::size_t default_lanes);

inline constexpr std::string_view kUnknownKind = "UNKNOWN_KIND";
inline constexpr std::string_view kBusy = "BUSY";

/// Source of the time used for exec_ms. Defaults to the process clock.
using ClockFn = std::function<Millis()>;

Millis process_clock_ms();

/// Runs one dispatch. exec_ms spans only the executor call. Never throws:
/// unknown kinds and executor exceptions become FAILED results.
wire::Result execute_task(const ExecutorRegistry &registry, const wire::Dispatch &dispatch,
                          const WorkerId &worker_id, const ClockFn &clock = process_clock_ms);

struct WorkerConfig {
  WorkerId worker_id;
  std::string master_address;
  std::int64_t cpu_mhz = 0;
  bool has_gpu = false;
  std::optional<std::int64_t> gpu_cores;
  std::optional<std::int64_t> gpu_mem_mb;
  std::size_t lane_count = 1;

  /// Empty when valid.
  std::string validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RegistrationRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exponential reconnect delays: base, 2*base, ... capped.
class RetryBackoff {
 public:
  explicit RetryBackoff(Millis base_ms = 1000, Millis cap_ms = 30000)
      : base_(base_ms), cap_(cap_ms), next_(base_ms) {}
  Millis next();
  void reset() { next_ = base_; }

 private:
  Millis base_;
  Millis cap_;
  Millis next_;
};

/// Transport-independent worker control state. The driver feeds it inbound
/// messages and clock ticks, sends what it returns, and runs accepted
/// dispatches (take_dispatch -> execute_task -> finish).
class WorkerAgent {
 public:
  /// Throws ConfigError for an invalid config.
  explicit WorkerAgent(WorkerConfig config);

  const WorkerConfig &config() const { return config_; }
  bool registered() const { return registered_; }
  bool busy() const { return current_.has_value(); }
  Millis heartbeat_interval_ms() const { return interval_ms_; }

  /// REGISTER for this worker; marks the agent as awaiting an ack.
  wire::Message registration(Millis now_ms);

  /// Handles REGISTER_ACK, HEARTBEAT_ACK and DISPATCH. Throws
  /// RegistrationRejected when the master refuses the registration.
  std::vector<wire::Message> on_message(const wire::Message &msg, Millis now_ms);

  /// HEARTBEAT{worker_id, now, busy}; records the send time.
  wire::Message heartbeat_tick(Millis now_ms);
  /// Whether a heartbeat (or a re-registration) is due at now_ms.
  bool heartbeat_due(Millis now_ms) const;
  /// Registered but no ack from the master for the liveness window.
  bool master_silent(Millis now_ms) const;

  /// The dispatch accepted by the last on_message, if any, exactly once.
  std::optional<wire::Dispatch> take_dispatch();
  /// Records completion of the running task and returns the RESULT to send.
  wire::Message finish(wire::Result result);

 private:
  WorkerConfig config_;
  bool registered_ = false;
  Millis interval_ms_ = 2000;
  Millis last_beat_ms_ = 0;
  Millis last_ack_ms_ = 0;
  std::optional<TaskId> current_;
  std::optional<wire::Dispatch> pending_;
};

}  // namespace hetsched::worker
