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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetsched/master.h"
#include "hetsched/protocol.h"
#include "hetsched/worker.h"

namespace hetsched::net {

struct Endpoint {
  std::string host;  // empty means any address
  std::uint16_t port = 0;
};

/// "host:port", ":port" or "[v6]:port".
Endpoint parse_endpoint(std::string_view text);

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConnectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket &&other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket &operator=(Socket &&other) noexcept;
  Socket(const Socket &) = delete;
  Socket &operator=(const Socket &) = delete;
  ~Socket();

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset();

 private:
  int fd_ = -1;
};

Socket listen_on(const Endpoint &endpoint);
std::uint16_t local_port(const Socket &socket);
Socket connect_to(const Endpoint &endpoint);

/// Blocking message connection used by clients and workers.
class MessageStream {
 public:
  explicit MessageStream(Socket socket);

  void send(const wire::Message &msg);
  /// Waits up to timeout_ms (negative: forever) for one message. Returns
  /// nullopt on timeout; throws ConnectError when the peer closed.
  std::optional<wire::Message> receive(int timeout_ms);
  int fd() const { return socket_.fd(); }

 private:
  Socket socket_;
  wire::FrameReader reader_;
};

struct MasterOptions {
  SchedulerConfig scheduler;
  /// Written with one JOB_STATUS_REPLY per line on shutdown.
  std::optional<std::filesystem::path> state_file;
  /// Written with the bound port once listening.
  std::optional<std::filesystem::path> port_file;
};

/// Single-threaded poll() loop serving workers and clients. Throws
/// BindError from the constructor when the address cannot be bound.
class MasterServer {
 public:
  explicit MasterServer(MasterOptions options);
  ~MasterServer();

  std::uint16_t port() const { return port_; }
  /// Runs until `stop` becomes true, then writes the state file.
  void run(const std::atomic<bool> &stop);

 private:
  MasterOptions options_;
  Socket listener_;
  std::uint16_t port_ = 0;
};

void write_state_file(const std::filesystem::path &path,
                      const std::vector<wire::JobStatusReply> &jobs);

/// Connects, registers, heartbeats and executes dispatches until `stop`.
/// Reconnects with RetryBackoff when the master is unreachable or the
/// connection drops. Throws RegistrationRejected if the master refuses.
/// `on_registered` runs after every accepted REGISTER_ACK.
void run_worker(const worker::WorkerConfig &config, const std::atomic<bool> &stop,
                const std::function<void()> &on_registered = {});

/// Blocking client for SUBMIT / JOB_STATUS.
class MasterClient {
 public:
  /// Throws ConnectError when the master is unreachable.
  explicit MasterClient(const Endpoint &master);

  wire::SubmitAck submit(const wire::Submit &submit);
  wire::JobStatusReply status(const JobId &job);
  /// Polls until every task is COMPLETED or FAILED or `timeout_ms` elapses
  /// (negative: no limit). Returns the last reply.
  wire::JobStatusReply wait(const JobId &job, Millis timeout_ms, int poll_ms = 20);

 private:
  wire::Message request(const wire::Message &msg);
  MessageStream stream_;
};

bool job_terminal(const wire::JobStatusReply &reply);

}  // namespace hetsched::net
