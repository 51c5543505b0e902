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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hetsched/core.h"

namespace hetsched::wire {

// Standard base64 (RFC 4648 alphabet, '=' padding). Decoding is strict:
// no whitespace, correct padding, zero trailing bits.
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::optional<Bytes> base64_decode(std::string_view text);

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string &detail)
      : std::runtime_error(detail), code_(std::move(code)) {}
  const std::string &code() const { return code_; }

 private:
  std::string code_;
};

inline constexpr std::string_view kProtocolErrorCode = "PROTOCOL_ERROR";
inline constexpr std::size_t kMaxLineBytes = std::size_t{64} << 20;

struct Register {
  WorkerId worker_id;
  std::int64_t cpu_mhz = 0;
  bool has_gpu = false;
  std::optional<std::int64_t> gpu_cores;
  std::optional<std::int64_t> gpu_mem_mb;
  bool operator==(const Register &) const = default;
};

struct RegisterAck {
  bool accepted = false;
  std::int64_t heartbeat_interval_ms = 0;
  std::optional<std::string> reason;
  bool operator==(const RegisterAck &) const = default;
};

struct Heartbeat {
  WorkerId worker_id;
  std::int64_t ts_ms = 0;
  bool busy = false;
  bool operator==(const Heartbeat &) const = default;
};

enum class HeartbeatStatus { kOk, kNotRegistered };

struct HeartbeatAck {
  HeartbeatStatus status = HeartbeatStatus::kOk;
  bool operator==(const HeartbeatAck &) const = default;
};

struct Dispatch {
  TaskId task_id;
  std::string kind;
  bool requires_gpu = false;
  Params params;
  Bytes payload;
  bool operator==(const Dispatch &) const = default;
};

enum class ResultStatus { kOk, kFailed };

struct Result {
  TaskId task_id;
  WorkerId worker_id;
  ResultStatus status = ResultStatus::kOk;
  Millis exec_ms = 0;
  std::optional<Bytes> output;
  std::optional<std::string> error;
  bool operator==(const Result &) const = default;
};

struct TaskSpec {
  TaskId task_id;
  std::string kind;
  bool requires_gpu = false;
  Params params;
  Bytes payload;
  bool operator==(const TaskSpec &) const = default;
};

struct Submit {
  JobId job_id;
  std::vector<TaskSpec> tasks;
  bool operator==(const Submit &) const = default;
};

struct SubmitAck {
  JobId job_id;
  std::int64_t accepted_count = 0;
  bool operator==(const SubmitAck &) const = default;
};

struct JobStatus {
  JobId job_id;
  bool operator==(const JobStatus &) const = default;
};

struct TaskStatus {
  TaskId task_id;
  TaskState state = TaskState::kQueued;
  std::optional<WorkerId> worker_id;
  std::optional<Millis> submitted_ms;
  std::optional<Millis> dispatched_ms;
  std::optional<Millis> completed_ms;
  std::optional<Millis> exec_ms;
  std::optional<Bytes> output;
  std::optional<std::string> error;
  bool operator==(const TaskStatus &) const = default;
};

struct JobStatusReply {
  JobId job_id;
  std::vector<TaskStatus> tasks;
  bool operator==(const JobStatusReply &) const = default;
};

struct Error {
  std::string code;
  std::string detail;
  bool operator==(const Error &) const = default;
};

using Message = std::variant<Register, RegisterAck, Heartbeat, HeartbeatAck, Dispatch,
                             Result, Submit, SubmitAck, JobStatus, JobStatusReply, Error>;

/// Wire name of the alternative held by `m` ("REGISTER", "HEARTBEAT", ...).
std::string_view type_name(const Message &m);

/// One JSON object on one line, LF-terminated. "type" comes first and the
/// remaining keys follow in byte order, so output is deterministic.
std::string encode(const Message &m);

/// Parses one line (a trailing LF is accepted but not required). Field
/// order is free. Throws ProtocolError on malformed JSON, a missing or
/// mistyped field, or an unknown type.
Message decode(std::string_view line);

/// Splits a byte stream into LF-terminated lines. Holds at most
/// kMaxLineBytes of an unterminated line; beyond that feed() throws
/// ProtocolError and the reader must be discarded along with the connection.
class FrameReader {
 public:
  explicit FrameReader(std::size_t max_line = kMaxLineBytes) : max_line_(max_line) {}

  void feed(std::string_view chunk);
  /// Next complete line without its LF, if one is buffered.
  std::optional<std::string> next();
  std::size_t buffered() const { return buffer_.size() - consumed_; }

 private:
  std::string buffer_;
  std::size_t consumed_ = 0;
  std::size_t line_start_ = 0;
  std::deque<std::size_t> line_ends_;
  std::size_t max_line_;
};

}  // namespace hetsched::wire
