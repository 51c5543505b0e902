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

#include <sys/types.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetsched/master.h"
#include "hetsched/net.h"
#include "hetsched/protocol.h"
#include "hetsched/sobel.h"
#include "hetsched/worker.h"

namespace hetsched::harness {

/// One byte-exact frame sent through the in-memory network.
struct WireRecord {
  Millis at_ms;
  std::string from;
  std::string to;
  std::string bytes;
};

struct ExecutionEvent {
  WorkerId worker;
  TaskId task;
  bool start;  // false: finish
};

/// A master and any number of worker agents in one process, connected by
/// in-memory byte pipes carrying the same newline-delimited JSON as TCP and
/// driven by a logical clock. Delivery order is fixed (pipes are drained in
/// creation order), so identical scripts give identical traces.
class InProcCluster {
 public:
  struct Options {
    SchedulerConfig scheduler;
    /// Logical step used by advance(); the master's eviction check runs
    /// every step.
    Millis step_ms = 100;
  };

  InProcCluster();
  explicit InProcCluster(Options options);
  ~InProcCluster();
  InProcCluster(const InProcCluster &) = delete;
  InProcCluster &operator=(const InProcCluster &) = delete;

  Millis now() const { return now_; }
  const master::MasterNode &master() const { return *master_; }

  /// Registers a worker (REGISTER/REGISTER_ACK exchanged before return).
  void add_worker(worker::WorkerConfig config);
  /// The worker stops participating: no heartbeats, no results, inbound
  /// frames dropped. Its running task is lost.
  void kill_worker(const WorkerId &id);
  /// A held worker accepts dispatches but does not run them until released.
  void hold_worker(const WorkerId &id, bool held);
  bool worker_alive(const WorkerId &id) const;
  bool worker_busy(const WorkerId &id) const;
  std::vector<WorkerId> live_workers() const;

  /// Replaces the master with a fresh one; connections stay open, so
  /// workers learn through HEARTBEAT_ACK{NOT_REGISTERED} and re-register.
  void restart_master();

  wire::SubmitAck submit(const wire::Submit &submit);
  wire::JobStatusReply status(const JobId &job);

  /// Moves the logical clock forward in step_ms increments; each step sends
  /// due heartbeats, ticks the master, and drains all pipes.
  void advance(Millis duration);
  /// Delivers frames and runs executions until nothing is pending.
  void run_until_idle();

  /// All master->worker DISPATCH frames.
  std::vector<WireRecord> dispatch_trace() const;
  const std::vector<WireRecord> &wire_trace() const { return trace_; }
  const std::vector<ExecutionEvent> &executions() const { return executions_; }
  /// DISPATCH messages each worker actually received.
  const std::map<WorkerId, std::vector<wire::Dispatch>> &received() const { return received_; }

 private:
  struct Pipe;
  struct WorkerNode;

  void send(Pipe &pipe, const wire::Message &msg, const std::string &from,
            const std::string &to);
  bool drain_to_master();
  bool drain_to_workers();
  bool drain_to_client();
  bool run_executions();
  void deliver_master(std::vector<master::Outbound> outbound);
  WorkerNode &node(const WorkerId &id);
  const WorkerNode &node(const WorkerId &id) const;

  Options options_;
  Millis now_ = 0;
  std::unique_ptr<master::MasterNode> master_;
  std::vector<std::unique_ptr<WorkerNode>> workers_;
  std::unique_ptr<Pipe> client_up_;
  std::unique_ptr<Pipe> client_down_;
  std::vector<wire::Message> client_inbox_;
  master::ConnId client_conn_ = 0;
  master::ConnId next_conn_ = 1;
  std::vector<WireRecord> trace_;
  std::vector<ExecutionEvent> executions_;
  std::map<WorkerId, std::vector<wire::Dispatch>> received_;
};

// Benchmark -------------------------------------------------------------------

struct BenchRow {
  std::string label;
  std::size_t m = 0;
  std::size_t n = 0;
  Millis seq_exec_ms = 0;
  Millis par_exec_ms = 0;
  Millis turnaround_ms = 0;
  Millis overhead_ms = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  std::string table() const;
  /// label,m,n,seq_exec_ms,par_exec_ms,turnaround_ms,overhead_ms
  std::string csv() const;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchImage {
  std::string label;
  sobel::GrayImage image;
};

struct BenchOptions {
  std::size_t lane_count = 4;
  /// Each image is measured this many times; exec columns report the
  /// fastest run, turnaround the run that produced the fastest par exec.
  int repetitions = 3;
  Millis task_timeout_ms = 300000;
};

/// Runs sobel_seq (CPU task) and sobel_par (GPU task) for every image
/// through a live master. Throws IntegrityError if the two outputs differ.
BenchReport run_bench(net::MasterClient &client, const std::vector<BenchImage> &images,
                      const BenchOptions &options);

/// Submits `count` one-task jobs of `kind` one after another and returns
/// turnaround - exec for each.
std::vector<Millis> measure_overhead(net::MasterClient &client, const std::string &kind,
                                     bool requires_gpu, const Params &params,
                                     const Bytes &payload, int count,
                                     Millis task_timeout_ms = 60000);

/// Coefficient of variation (population stddev / mean).
double coefficient_of_variation(const std::vector<Millis> &values);

// Local process cluster -------------------------------------------------------

struct LocalWorkerSpec {
  WorkerId id;
  std::int64_t mhz = 2400;
  bool gpu = false;
  std::size_t lanes = 1;
};

/// A master and worker processes spawned from the CLI binary on loopback.
/// Terminates (SIGTERM, then waits) every child on destruction.
class LocalCluster {
 public:
  LocalCluster(const std::filesystem::path &cli, const std::vector<LocalWorkerSpec> &workers,
               Millis heartbeat_ms = 2000);
  ~LocalCluster();
  LocalCluster(const LocalCluster &) = delete;
  LocalCluster &operator=(const LocalCluster &) = delete;

  std::string master_address() const;
  std::uint16_t port() const { return port_; }
  /// Blocks until every worker has registered (each touches a ready file
  /// on its first REGISTER_ACK) or the timeout passes.
  bool wait_ready(Millis timeout_ms);

 private:
  pid_t spawn(const std::vector<std::string> &args);

  std::filesystem::path dir_;
  std::vector<pid_t> children_;
  std::vector<std::filesystem::path> ready_files_;
  std::uint16_t port_ = 0;
};

}  // namespace hetsched::harness
