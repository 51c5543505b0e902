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
#include <random>
#include <string>
#include <variant>

#include "hetsched/protocol.h"

namespace testing_support {

using namespace hetsched;

// Generates structurally valid messages with awkward contents: escapes,
// control characters, multi-byte UTF-8, empty and binary payloads, optional
// fields both present and absent.
class MessageGen {
 public:
  explicit MessageGen(std::uint64_t seed) : rng_(seed) {}

  std::string text(std::size_t max_len = 12) {
    static const char *pieces[] = {"a", "Z", "0", " ", "\"", "\\", "/", "\n", "\t", "\x01",
                                   "\x7f", "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x98\x80", "{",
                                   "}", ":", ",", "W", "_"};
    std::string s;
    const auto len = pick(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) s += pieces[pick(std::size(pieces))];
    return s;
  }
  std::string id() { return "id" + std::to_string(pick(100000)) + text(3); }
  bool flag() { return pick(2) == 1; }
  std::int64_t int64() {
    switch (pick(4)) {
      case 0: return 0;
      case 1: return static_cast<std::int64_t>(pick(100000));
      case 2: return -static_cast<std::int64_t>(pick(100000));
      default: return static_cast<std::int64_t>(rng_() >> 12);
    }
  }
  std::int64_t positive() { return 1 + static_cast<std::int64_t>(pick(1 << 20)); }
  double millis() {
    switch (pick(3)) {
      case 0: return static_cast<double>(pick(100000));
      case 1: return std::uniform_real_distribution<double>(0, 1e7)(rng_);
      default: return std::uniform_real_distribution<double>(0, 1)(rng_);
    }
  }
  Bytes bytes(std::size_t max_len = 40) {
    Bytes b(pick(max_len + 1));
    for (auto &x : b) x = static_cast<std::uint8_t>(rng_());
    return b;
  }
  Params params() {
    Params p;
    const auto n = pick(4);
    for (std::size_t i = 0; i < n; ++i) p[text(6)] = text(8);
    return p;
  }
  template <class T, class F>
  std::optional<T> maybe(F make) {
    if (flag()) return make();
    return std::nullopt;
  }

  wire::Message of_type(std::size_t index) {
    switch (index) {
      case 0: {
        wire::Register m{id(), positive(), flag(), std::nullopt, std::nullopt};
        if (m.has_gpu) {
          m.gpu_cores = maybe<std::int64_t>([&] { return positive(); });
          m.gpu_mem_mb = maybe<std::int64_t>([&] { return positive(); });
        }
        return m;
      }
      case 1:
        return wire::RegisterAck{flag(), positive(), maybe<std::string>([&] { return text(); })};
      case 2:
        return wire::Heartbeat{id(), int64(), flag()};
      case 3:
        return wire::HeartbeatAck{flag() ? wire::HeartbeatStatus::kOk
                                         : wire::HeartbeatStatus::kNotRegistered};
      case 4:
        return wire::Dispatch{id(), text(), flag(), params(), bytes()};
      case 5:
        return wire::Result{id(),
                            id(),
                            flag() ? wire::ResultStatus::kOk : wire::ResultStatus::kFailed,
                            millis(),
                            maybe<Bytes>([&] { return bytes(); }),
                            maybe<std::string>([&] { return text(); })};
      case 6: {
        wire::Submit m{id(), {}};
        const auto n = pick(4);
        for (std::size_t i = 0; i < n; ++i) {
          m.tasks.push_back({id(), text(), flag(), params(), bytes()});
        }
        return m;
      }
      case 7:
        return wire::SubmitAck{id(), int64()};
      case 8:
        return wire::JobStatus{id()};
      case 9: {
        wire::JobStatusReply m{id(), {}};
        const auto n = pick(4);
        for (std::size_t i = 0; i < n; ++i) {
          wire::TaskStatus t;
          t.task_id = id();
          t.state = static_cast<TaskState>(pick(4));
          t.worker_id = maybe<std::string>([&] { return id(); });
          t.submitted_ms = maybe<double>([&] { return millis(); });
          t.dispatched_ms = maybe<double>([&] { return millis(); });
          t.completed_ms = maybe<double>([&] { return millis(); });
          t.exec_ms = maybe<double>([&] { return millis(); });
          t.output = maybe<Bytes>([&] { return bytes(); });
          t.error = maybe<std::string>([&] { return text(); });
          m.tasks.push_back(std::move(t));
        }
        return m;
      }
      default:
        return wire::Error{text(), text(30)};
    }
  }

  wire::Message any() { return of_type(pick(std::variant_size_v<wire::Message>)); }

  std::size_t pick(std::size_t n) { return n == 0 ? 0 : rng_() % n; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing_support
