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

#include <chrono>
#include <thread>

#include "hetsched/net.h"

namespace hetsched::net {

MasterClient::MasterClient(const Endpoint &master) : stream_(connect_to(master)) {}

wire::Message MasterClient::request(const wire::Message &msg) {
  stream_.send(msg);
  auto reply = stream_.receive(-1);
  if (!reply) throw ConnectError("no reply from master");
  if (const auto *err = std::get_if<wire::Error>(&*reply)) {
    throw std::runtime_error(err->code + ": " + err->detail);
  }
  return std::move(*reply);
}

wire::SubmitAck MasterClient::submit(const wire::Submit &submit) {
  auto reply = request(submit);
  if (auto *ack = std::get_if<wire::SubmitAck>(&reply)) return std::move(*ack);
  throw std::runtime_error("unexpected reply to SUBMIT: " + std::string(wire::type_name(reply)));
}

wire::JobStatusReply MasterClient::status(const JobId &job) {
  auto reply = request(wire::JobStatus{job});
  if (auto *status = std::get_if<wire::JobStatusReply>(&reply)) return std::move(*status);
  throw std::runtime_error("unexpected reply to JOB_STATUS: " +
                           std::string(wire::type_name(reply)));
}

bool job_terminal(const wire::JobStatusReply &reply) {
  for (const auto &t : reply.tasks) {
    if (t.state != TaskState::kCompleted && t.state != TaskState::kFailed) return false;
  }
  return true;
}

wire::JobStatusReply MasterClient::wait(const JobId &job, Millis timeout_ms, int poll_ms) {
  const auto start = std::chrono::steady_clock::now();
  while (true) {
    auto reply = status(job);
    if (job_terminal(reply)) return reply;
    const Millis elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    if (timeout_ms >= 0 && elapsed >= timeout_ms) return reply;
    std::this_thread::sleep_for(std::chrono::milliseconds(poll_ms));
  }
}

}  // namespace hetsched::net
