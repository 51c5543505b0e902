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

#include "hetsched/worker.h"

#include <algorithm>
#include <chrono>
#include <exception>
#include <thread>

#include "hetsched/sobel.h"

namespace hetsched::worker {

namespace {

constexpr int kMasterSilenceBeats = 3;

std::size_t parse_positive(const Params &params, const std::string &key,
                           std::size_t fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::size_t used = 0;
  const long long value = std::stoll(it->second, &used);
  if (used != it->second.size() || value < 0) {
    throw std::invalid_argument("param " + key + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

void ExecutorRegistry::add(std::string kind, Executor executor) {
  executors_[std::move(kind)] = std::move(executor);
}

const Executor *ExecutorRegistry::find(const std::string &kind) const {
  auto it = executors_.find(kind);
  return it == executors_.end() ? nullptr : &it->second;
}

std::vector<std::string> ExecutorRegistry::kinds() const {
  std::vector<std::string> out;
  for (const auto &[k, _] : executors_) out.push_back(k);
  return out;
}

ExecutorRegistry builtin_registry(std::size_t default_lanes) {
  ExecutorRegistry registry;
  registry.add("noop", [](const Params &, std::span<const std::uint8_t>) { return Bytes{}; });
  registry.add("sleep", [](const Params &params, std::span<const std::uint8_t>) {
    const auto ms = parse_positive(params, "duration_ms", 0);
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    return Bytes{};
  });
  registry.add("sobel_seq", [](const Params &, std::span<const std::uint8_t> payload) {
    return sobel::sobel_sequential_pgm(payload);
  });
  registry.add("sobel_par", [default_lanes](const Params &params,
                                            std::span<const std::uint8_t> payload) {
    const auto lanes = parse_positive(params, "lane_count", default_lanes);
    if (lanes == 0) throw std::invalid_argument("lane_count must be >= 1");
    return sobel::sobel_parallel_pgm(payload, lanes);
  });
  return registry;
}

Millis process_clock_ms() {
  static const auto start = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

wire::Result execute_task(const ExecutorRegistry &registry, const wire::Dispatch &dispatch,
                          const WorkerId &worker_id, const ClockFn &clock) {
  wire::Result result;
  result.task_id = dispatch.task_id;
  result.worker_id = worker_id;
  const Executor *executor = registry.find(dispatch.kind);
  if (executor == nullptr) {
    result.status = wire::ResultStatus::kFailed;
    result.error = std::string(kUnknownKind);
    return result;
  }
  const Millis start = clock();
  try {
    result.output = (*executor)(dispatch.params, dispatch.payload);
    result.status = wire::ResultStatus::kOk;
  } catch (const std::exception &e) {
    result.status = wire::ResultStatus::kFailed;
    result.output.reset();
    result.error = e.what();
  } catch (...) {
    result.status = wire::ResultStatus::kFailed;
    result.output.reset();
    result.error = "unknown executor exception";
  }
  result.exec_ms = std::max(Millis{0}, clock() - start);
  return result;
}

std::string WorkerConfig::validate() const {
  WorkerProfile profile;
  profile.worker_id = worker_id;
  profile.cpu_mhz = cpu_mhz;
  profile.has_gpu = has_gpu;
  profile.gpu_cores = gpu_cores;
  profile.gpu_mem_mb = gpu_mem_mb;
  if (auto why = validate_profile(profile); !why.empty()) return why;
  if (lane_count < 1) return "lane_count must be >= 1";
  return {};
}

Millis RetryBackoff::next() {
  const Millis delay = next_;
  next_ = std::min(cap_, next_ * 2);
  return delay;
}

WorkerAgent::WorkerAgent(WorkerConfig config) : config_(std::move(config)) {
  if (auto why = config_.validate(); !why.empty()) throw ConfigError(why);
}

wire::Message WorkerAgent::registration(Millis now_ms) {
  registered_ = false;
  last_beat_ms_ = now_ms;
  return wire::Register{config_.worker_id, config_.cpu_mhz, config_.has_gpu,
                        config_.gpu_cores, config_.gpu_mem_mb};
}

std::vector<wire::Message> WorkerAgent::on_message(const wire::Message &msg, Millis now_ms) {
  std::vector<wire::Message> out;
  if (const auto *ack = std::get_if<wire::RegisterAck>(&msg)) {
    if (!ack->accepted) {
      throw RegistrationRejected("master rejected registration: " +
                                 ack->reason.value_or("no reason given"));
    }
    registered_ = true;
    if (ack->heartbeat_interval_ms > 0) {
      interval_ms_ = static_cast<Millis>(ack->heartbeat_interval_ms);
    }
    last_beat_ms_ = now_ms;
    last_ack_ms_ = now_ms;
  } else if (const auto *hb = std::get_if<wire::HeartbeatAck>(&msg)) {
    last_ack_ms_ = now_ms;
    if (hb->status == wire::HeartbeatStatus::kNotRegistered) {
      out.push_back(registration(now_ms));
    }
  } else if (const auto *d = std::get_if<wire::Dispatch>(&msg)) {
    if (current_) {
      wire::Result busy;
      busy.task_id = d->task_id;
      busy.worker_id = config_.worker_id;
      busy.status = wire::ResultStatus::kFailed;
      busy.error = std::string(kBusy);
      out.emplace_back(std::move(busy));
    } else {
      current_ = d->task_id;
      pending_ = *d;
    }
  }
  return out;
}

wire::Message WorkerAgent::heartbeat_tick(Millis now_ms) {
  last_beat_ms_ = now_ms;
  return wire::Heartbeat{config_.worker_id, static_cast<std::int64_t>(now_ms), busy()};
}

bool WorkerAgent::heartbeat_due(Millis now_ms) const {
  return now_ms - last_beat_ms_ >= interval_ms_;
}

bool WorkerAgent::master_silent(Millis now_ms) const {
  return registered_ && now_ms - last_ack_ms_ > interval_ms_ * kMasterSilenceBeats;
}

std::optional<wire::Dispatch> WorkerAgent::take_dispatch() {
  auto d = std::move(pending_);
  pending_.reset();
  return d;
}

wire::Message WorkerAgent::finish(wire::Result result) {
  current_.reset();
  result.worker_id = config_.worker_id;
  return result;
}

}  // namespace hetsched::worker
