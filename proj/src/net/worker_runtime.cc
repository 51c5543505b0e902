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

#include <poll.h>
#include <sys/eventfd.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "hetsched/net.h"

namespace hetsched::net {

namespace {

// Runs one dispatch at a time off the control loop and signals completion
// through an eventfd the loop polls.
class ExecutionLane {
 public:
  ExecutionLane(const worker::ExecutorRegistry &registry, WorkerId worker_id)
      : registry_(registry), worker_id_(std::move(worker_id)), wake_(::eventfd(0, EFD_CLOEXEC)) {
    thread_ = std::jthread([this](std::stop_token st) { loop(st); });
  }

  ~ExecutionLane() {
    thread_.request_stop();
    cv_.notify_all();
  }

  int wake_fd() const { return wake_.fd(); }

  void start(wire::Dispatch dispatch) {
    {
      std::lock_guard lock(mu_);
      job_ = std::move(dispatch);
    }
    cv_.notify_all();
  }

  std::optional<wire::Result> poll_done() {
    std::uint64_t count = 0;
    [[maybe_unused]] const auto n = ::read(wake_.fd(), &count, sizeof(count));
    std::lock_guard lock(mu_);
    auto done = std::move(done_);
    done_.reset();
    return done;
  }

 private:
  void loop(std::stop_token st) {
    while (true) {
      wire::Dispatch job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return st.stop_requested() || job_.has_value(); });
        if (st.stop_requested()) return;
        job = std::move(*job_);
        job_.reset();
      }
      auto result = worker::execute_task(registry_, job, worker_id_);
      {
        std::lock_guard lock(mu_);
        done_ = std::move(result);
      }
      const std::uint64_t one = 1;
      [[maybe_unused]] const auto n = ::write(wake_.fd(), &one, sizeof(one));
    }
  }

  const worker::ExecutorRegistry &registry_;
  WorkerId worker_id_;
  Socket wake_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<wire::Dispatch> job_;
  std::optional<wire::Result> done_;
  std::jthread thread_;
};

void sleep_interruptible(Millis ms, const std::atomic<bool> &stop) {
  const auto until = std::chrono::steady_clock::now() +
                     std::chrono::microseconds(static_cast<std::int64_t>(ms * 1000));
  while (!stop.load() && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace

void run_worker(const worker::WorkerConfig &config, const std::atomic<bool> &stop,
                const std::function<void()> &on_registered) {
  worker::WorkerAgent agent(config);
  const auto registry = worker::builtin_registry(config.lane_count);
  const Endpoint master = parse_endpoint(config.master_address);
  worker::RetryBackoff backoff;
  ExecutionLane lane(registry, config.worker_id);
  // A result finished while disconnected is delivered on the next session;
  // the master drops it if the task has moved on.
  std::optional<wire::Message> undelivered;

  while (!stop.load()) {
    std::optional<MessageStream> stream;
    try {
      stream.emplace(connect_to(master));
    } catch (const ConnectError &e) {
      const Millis delay = backoff.next();
      spdlog::warn("{}; retrying in {} ms", e.what(), delay);
      sleep_interruptible(delay, stop);
      continue;
    }
    backoff.reset();

    try {
      stream->send(agent.registration(worker::process_clock_ms()));
      if (undelivered) {
        stream->send(*undelivered);
        undelivered.reset();
      }
      while (!stop.load()) {
        const Millis now = worker::process_clock_ms();
        if (agent.master_silent(now)) {
          spdlog::warn("master silent; reconnecting");
          break;
        }
        if (agent.heartbeat_due(now)) {
          stream->send(agent.registered() ? agent.heartbeat_tick(now) : agent.registration(now));
        }

        pollfd fds[2] = {{stream->fd(), POLLIN, 0}, {lane.wake_fd(), POLLIN, 0}};
        const int rc = ::poll(fds, 2, 50);
        if (rc < 0 && errno != EINTR) throw ConnectError("poll failed");

        if (fds[1].revents & POLLIN) {
          if (auto result = lane.poll_done()) stream->send(agent.finish(std::move(*result)));
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
          while (true) {
            std::optional<wire::Message> msg;
            try {
              msg = stream->receive(0);
            } catch (const wire::ProtocolError &e) {
              spdlog::warn("bad message from master: {}", e.what());
              continue;
            }
            if (!msg) break;
            const bool was_registered = agent.registered();
            for (auto &reply : agent.on_message(*msg, worker::process_clock_ms())) {
              stream->send(reply);
            }
            if (!was_registered && agent.registered()) {
              spdlog::info("registered with master; heartbeat every {} ms",
                           agent.heartbeat_interval_ms());
              if (on_registered) on_registered();
            }
            if (auto dispatch = agent.take_dispatch()) lane.start(std::move(*dispatch));
          }
        }
      }
    } catch (const ConnectError &e) {
      spdlog::warn("lost master connection: {}", e.what());
      if (agent.busy()) {
        // Wait for the running task so the slot is free before re-registering.
        pollfd fd{lane.wake_fd(), POLLIN, 0};
        while (!stop.load() && ::poll(&fd, 1, 100) == 0) {
        }
        if (auto result = lane.poll_done()) undelivered = agent.finish(std::move(*result));
      }
      sleep_interruptible(backoff.next(), stop);
    }
  }
}

}  // namespace hetsched::net
