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

#include <random>

#include "doctest.h"
#include "hetsched/protocol.h"
#include "support/random_messages.h"

using namespace hetsched;
using namespace hetsched::wire;

namespace {

Bytes of(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string decode_error(std::string_view line) {
  try {
    decode(line);
  } catch (const ProtocolError &e) {
    CHECK(e.code() == kProtocolErrorCode);
    return e.what();
  }
  FAIL("expected a ProtocolError for " << line);
  return {};
}

}  // namespace

TEST_CASE("base64 matches the RFC 4648 vectors") {
  const std::pair<std::string_view, std::string_view> vectors[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},        {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (auto [plain, coded] : vectors) {
    CHECK(base64_encode(of(plain)) == coded);
    CHECK(base64_decode(coded) == of(plain));
  }
  CHECK(base64_encode(Bytes{0x01, 0x02, 0x03}) == "AQID");
  CHECK(base64_encode(Bytes{0xff, 0xfe}) == "//4=");
}

TEST_CASE("base64 decoding is strict") {
  for (std::string_view bad : {"Zg", "Zg=", "Z===", "Zm9v\n", "Zm 9v", "Zh==", "Zm9=", "====",
                               "Zm9v====", "A", "Zg==Zg=="}) {
    CHECK_MESSAGE(!base64_decode(bad).has_value(), bad);
  }
}

TEST_CASE("base64 round-trips random bytes") {
  std::mt19937 rng(3);
  for (int i = 0; i < 500; ++i) {
    Bytes b(rng() % 70);
    for (auto &x : b) x = static_cast<std::uint8_t>(rng());
    const auto text = base64_encode(b);
    CHECK(text.size() == (b.size() + 2) / 3 * 4);
    CHECK(base64_decode(text) == b);
  }
}

TEST_CASE("golden encodings") {
  CHECK(encode(Heartbeat{"W1", 5000, false}) ==
        "{\"type\":\"HEARTBEAT\",\"busy\":false,\"ts_ms\":5000,\"worker_id\":\"W1\"}\n");
  CHECK(encode(Dispatch{"T1", "noop", false, {}, {}}) ==
        "{\"type\":\"DISPATCH\",\"kind\":\"noop\",\"params\":{},\"payload_b64\":\"\","
        "\"requires_gpu\":false,\"task_id\":\"T1\"}\n");
  CHECK(encode(Result{"T1", "W1", ResultStatus::kOk, 2.5, Bytes{1, 2, 3}, std::nullopt}) ==
        "{\"type\":\"RESULT\",\"exec_ms\":2.5,\"output_b64\":\"AQID\",\"status\":\"OK\","
        "\"task_id\":\"T1\",\"worker_id\":\"W1\"}\n");
  CHECK(encode(Register{"W1", 2400, true, 384, 2048}) ==
        "{\"type\":\"REGISTER\",\"cpu_mhz\":2400,\"gpu_cores\":384,\"gpu_mem_mb\":2048,"
        "\"has_gpu\":true,\"worker_id\":\"W1\"}\n");
  CHECK(encode(Register{"W2", 2000, false, std::nullopt, std::nullopt}) ==
        "{\"type\":\"REGISTER\",\"cpu_mhz\":2000,\"has_gpu\":false,\"worker_id\":\"W2\"}\n");
  CHECK(encode(RegisterAck{true, 2000, std::nullopt}) ==
        "{\"type\":\"REGISTER_ACK\",\"accepted\":true,\"heartbeat_interval_ms\":2000}\n");
  CHECK(encode(HeartbeatAck{HeartbeatStatus::kNotRegistered}) ==
        "{\"type\":\"HEARTBEAT_ACK\",\"status\":\"NOT_REGISTERED\"}\n");
  CHECK(encode(Submit{"J1", {{"T1", "sleep", true, {{"duration_ms", "100"}, {"a", "b"}}, {}}}}) ==
        "{\"type\":\"SUBMIT\",\"job_id\":\"J1\",\"tasks\":[{\"kind\":\"sleep\",\"params\":"
        "{\"a\":\"b\",\"duration_ms\":\"100\"},\"payload_b64\":\"\",\"requires_gpu\":true,"
        "\"task_id\":\"T1\"}]}\n");
  CHECK(encode(SubmitAck{"J1", 3}) == "{\"type\":\"SUBMIT_ACK\",\"accepted_count\":3,\"job_id\":\"J1\"}\n");
  CHECK(encode(JobStatus{"J1"}) == "{\"type\":\"JOB_STATUS\",\"job_id\":\"J1\"}\n");
  TaskStatus ts;
  ts.task_id = "T1";
  ts.state = TaskState::kQueued;
  ts.submitted_ms = 7;
  CHECK(encode(JobStatusReply{"J1", {ts}}) ==
        "{\"type\":\"JOB_STATUS_REPLY\",\"job_id\":\"J1\",\"tasks\":[{\"state\":\"QUEUED\","
        "\"submitted_ms\":7.0,\"task_id\":\"T1\"}]}\n");
  CHECK(encode(Error{"PROTOCOL_ERROR", "x"}) ==
        "{\"type\":\"ERROR\",\"code\":\"PROTOCOL_ERROR\",\"detail\":\"x\"}\n");
}

TEST_CASE("encoding is one LF-terminated line") {
  testing_support::MessageGen gen(11);
  for (int i = 0; i < 2000; ++i) {
    const auto line = encode(gen.any());
    REQUIRE(line.back() == '\n');
    REQUIRE(line.find('\n') == line.size() - 1);
    REQUIRE(line.rfind("{\"type\":\"", 0) == 0);
  }
}

TEST_CASE("decode tolerates any field order") {
  const auto m = decode(R"({"worker_id":"W1","busy":true,"type":"HEARTBEAT","ts_ms":12})");
  CHECK(m == Message{Heartbeat{"W1", 12, true}});
  CHECK(decode("{\"type\":\"JOB_STATUS\",\"job_id\":\"J\"}\n") == Message{JobStatus{"J"}});
}

TEST_CASE("decode errors") {
  CHECK(decode_error("{\"type\":\"NOPE\"}\n").find("NOPE") != std::string::npos);
  decode_error("{\"type\":\"HEARTBEAT\",");
  decode_error("[1,2]");
  decode_error("");
  CHECK(decode_error(R"({"type":"HEARTBEAT","busy":false,"worker_id":"W1"})").find("ts_ms") !=
        std::string::npos);
  CHECK(decode_error(R"({"busy":false,"ts_ms":1,"worker_id":"W1"})").find("type") !=
        std::string::npos);
  CHECK(decode_error(R"({"type":"HEARTBEAT","busy":"no","ts_ms":1,"worker_id":"W1"})")
            .find("busy") != std::string::npos);
  decode_error(R"({"type":"HEARTBEAT","busy":false,"ts_ms":1.5,"worker_id":"W1"})");
  CHECK(decode_error(R"({"type":"HEARTBEAT_ACK","status":"MAYBE"})").find("status") !=
        std::string::npos);
  CHECK(decode_error(R"({"type":"DISPATCH","kind":"k","params":{},"payload_b64":"%%",)"
                     R"("requires_gpu":false,"task_id":"T"})")
            .find("payload_b64") != std::string::npos);
  decode_error(R"({"type":"DISPATCH","kind":"k","params":{"a":1},"payload_b64":"",)"
               R"("requires_gpu":false,"task_id":"T"})");
  CHECK(decode_error(R"({"type":"SUBMIT","job_id":"J","tasks":[{"kind":"k"}]})").find("task_id") !=
        std::string::npos);
}

TEST_CASE("round-trip identity for random messages of every type") {
  testing_support::MessageGen gen(2024);
  for (std::size_t type = 0; type < std::variant_size_v<Message>; ++type) {
    for (int i = 0; i < 1000; ++i) {
      const auto m = gen.of_type(type);
      const auto line = encode(m);
      const auto back = decode(line);
      REQUIRE_MESSAGE(back == m, line);
      REQUIRE(encode(back) == line);
    }
  }
}

TEST_CASE("encoding is deterministic across independent generations") {
  testing_support::MessageGen a(77), b(77);
  for (int i = 0; i < 3000; ++i) REQUIRE(encode(a.any()) == encode(b.any()));
}

TEST_CASE("invalid UTF-8 is replaced, not fatal") {
  const auto line = encode(Error{"E", std::string("bad \xff byte")});
  const auto back = std::get<Error>(decode(line));
  CHECK(back.detail == "bad \xef\xbf\xbd byte");
}

TEST_CASE("frame reader") {
  SUBCASE("two messages in one chunk") {
    FrameReader r;
    r.feed(encode(JobStatus{"A"}) + encode(JobStatus{"B"}));
    CHECK(decode(*r.next()) == Message{JobStatus{"A"}});
    CHECK(decode(*r.next()) == Message{JobStatus{"B"}});
    CHECK_FALSE(r.next().has_value());
    CHECK(r.buffered() == 0);
  }
  SUBCASE("split message") {
    const auto bytes = encode(JobStatus{"A"});
    FrameReader r;
    r.feed(bytes.substr(0, 5));
    CHECK_FALSE(r.next().has_value());
    CHECK(r.buffered() == 5);
    r.feed(bytes.substr(5));
    CHECK(decode(*r.next()) == Message{JobStatus{"A"}});
  }
  SUBCASE("empty lines come through as empty") {
    FrameReader r;
    r.feed("\n\n");
    CHECK(r.next() == std::string());
    CHECK(r.next() == std::string());
  }
}

TEST_CASE("frame reader enforces the line cap") {
  SUBCASE("small cap") {
    FrameReader r(16);
    r.feed(std::string(16, 'x') + "\n");
    CHECK(r.next()->size() == 16);
    CHECK_THROWS_AS(r.feed(std::string(17, 'x')), ProtocolError);
  }
  SUBCASE("cap exceeded across chunks") {
    FrameReader r(16);
    r.feed(std::string(10, 'x'));
    CHECK_THROWS_AS(r.feed(std::string(10, 'x')), ProtocolError);
  }
  SUBCASE("terminated long line inside one chunk") {
    FrameReader r(16);
    CHECK_THROWS_AS(r.feed("ok\n" + std::string(20, 'x') + "\n"), ProtocolError);
  }
  SUBCASE("65 MiB line at the default cap") {
    FrameReader r;
    const std::string chunk(1 << 20, 'x');
    bool threw = false;
    for (int i = 0; i < 65 && !threw; ++i) {
      try {
        r.feed(chunk);
      } catch (const ProtocolError &) {
        threw = true;
      }
    }
    CHECK(threw);
  }
  SUBCASE("64 MiB line is accepted") {
    FrameReader r;
    std::string line(kMaxLineBytes, 'x');
    line += '\n';
    r.feed(line);
    CHECK(r.next()->size() == kMaxLineBytes);
  }
}

TEST_CASE("framing is invariant under random chunk partitions") {
  testing_support::MessageGen gen(5);
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Message> msgs;
    std::string stream;
    for (int i = 0; i < 20; ++i) {
      msgs.push_back(gen.any());
      stream += encode(msgs.back());
    }
    FrameReader r;
    std::vector<Message> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t n = std::min<std::size_t>(stream.size() - pos, 1 + rng() % 64);
      r.feed(std::string_view(stream).substr(pos, n));
      pos += n;
      while (auto line = r.next()) got.push_back(decode(*line));
    }
    REQUIRE(got == msgs);
  }
}
