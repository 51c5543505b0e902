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

#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <thread>

#include "doctest.h"
#include "hetsched/net.h"
#include "hetsched/sobel.h"
#include "oracle/sobel_oracle.h"

using namespace hetsched;
using namespace std::chrono_literals;

namespace {

// Master plus worker threads on loopback; everything stops on destruction.
class Loopback {
 public:
  explicit Loopback(net::MasterOptions opts = {}) {
    opts.scheduler.listen_address = "127.0.0.1:0";
    opts.scheduler.heartbeat_interval_ms = 200;
    server_ = std::make_unique<net::MasterServer>(std::move(opts));
    master_ = std::thread([this] { server_->run(stop_master_); });
  }
  ~Loopback() {
    stop_workers_ = true;
    for (auto &t : workers_) t.join();
    stop_master_ = true;
    master_.join();
  }

  void add_worker(const WorkerId &id, bool gpu, std::size_t lanes = 2) {
    worker::WorkerConfig c;
    c.worker_id = id;
    c.master_address = address();
    c.cpu_mhz = 2400;
    c.has_gpu = gpu;
    c.lane_count = lanes;
    auto flag = std::make_shared<std::atomic<bool>>(false);
    workers_.emplace_back([c, flag, this] { net::run_worker(c, stop_workers_, [flag] { *flag = true; }); });
    const auto deadline = std::chrono::steady_clock::now() + 5s;
    while (!*flag && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(5ms);
    REQUIRE(*flag);
  }

  std::string address() const { return "127.0.0.1:" + std::to_string(server_->port()); }
  net::Endpoint endpoint() const { return {"127.0.0.1", server_->port()}; }
  std::uint16_t port() const { return server_->port(); }

 private:
  std::unique_ptr<net::MasterServer> server_;
  std::atomic<bool> stop_master_{false};
  std::atomic<bool> stop_workers_{false};
  std::thread master_;
  std::vector<std::thread> workers_;
};

sobel::GrayImage random_image(std::uint32_t seed, std::size_t w, std::size_t h) {
  std::mt19937 rng(seed);
  sobel::GrayImage img(w, h);
  for (auto &p : img.pixels()) p = static_cast<std::uint8_t>(rng());
  return img;
}

std::string read_all(int fd) {
  std::string out;
  char buf[4096];
  while (true) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace

TEST_CASE("parse_endpoint") {
  auto ep = net::parse_endpoint("127.0.0.1:7070");
  CHECK(ep.host == "127.0.0.1");
  CHECK(ep.port == 7070);
  ep = net::parse_endpoint(":0");
  CHECK(ep.host.empty());
  CHECK(ep.port == 0);
  ep = net::parse_endpoint("[::1]:80");
  CHECK(ep.host == "::1");
  CHECK(ep.port == 80);
  CHECK_THROWS_AS(net::parse_endpoint("localhost"), std::invalid_argument);
  CHECK_THROWS_AS(net::parse_endpoint("h:"), std::invalid_argument);
  CHECK_THROWS_AS(net::parse_endpoint("h:70000"), std::invalid_argument);
  CHECK_THROWS_AS(net::parse_endpoint("h:7x"), std::invalid_argument);
  CHECK_THROWS_AS(net::parse_endpoint("[::1]80"), std::invalid_argument);
}

TEST_CASE("binding an occupied port fails") {
  Loopback lb;
  net::MasterOptions opts;
  opts.scheduler.listen_address = lb.address();
  CHECK_THROWS_AS(net::MasterServer{opts}, net::BindError);
}

TEST_CASE("connecting to a closed port fails") {
  std::uint16_t port;
  {
    Loopback lb;
    port = lb.port();
  }
  CHECK_THROWS_AS(net::MasterClient({"127.0.0.1", port}), net::ConnectError);
}

TEST_CASE("sobel jobs run end to end over tcp") {
  Loopback lb;
  lb.add_worker("W1", true, 3);
  lb.add_worker("W2", false);
  net::MasterClient client(lb.endpoint());

  const auto img = random_image(11, 97, 41);
  const auto payload = sobel::write_pgm(img);
  const std::vector<std::uint8_t> px(img.pixels().begin(), img.pixels().end());
  const auto expected = sobel::write_pgm(sobel::GrayImage(97, 41, oracle::sobel(px, 97, 41)));

  wire::Submit s{"J", {{"par", "sobel_par", true, {}, payload}, {"seq", "sobel_seq", false, {}, payload}}};
  CHECK(client.submit(s).accepted_count == 2);
  const auto reply = client.wait("J", 10000);
  REQUIRE(net::job_terminal(reply));
  REQUIRE(reply.tasks.size() == 2);
  for (const auto &t : reply.tasks) {
    CHECK(t.state == TaskState::kCompleted);
    CHECK(*t.output == expected);
    CHECK(timing_consistent({t.submitted_ms, t.dispatched_ms, t.completed_ms, t.exec_ms}));
  }
  CHECK(reply.tasks[0].worker_id == "W1");
  CHECK(reply.tasks[1].worker_id == "W2");
}

TEST_CASE("unknown jobs and malformed lines get an ERROR") {
  Loopback lb;
  net::MasterClient client(lb.endpoint());
  try {
    client.status("missing");
    FAIL("expected an error");
  } catch (const std::runtime_error &e) {
    CHECK(std::string(e.what()).rfind("UNKNOWN_JOB", 0) == 0);
  }

  net::MessageStream raw(net::connect_to(lb.endpoint()));
  const std::string junk = "{\"type\":\"NOPE\"}\n";
  REQUIRE(::send(raw.fd(), junk.data(), junk.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(junk.size()));
  auto msg = raw.receive(5000);
  REQUIRE(msg.has_value());
  CHECK(std::get<wire::Error>(*msg).code == std::string(wire::kProtocolErrorCode));
  // The connection stays usable after a bad line.
  raw.send(wire::JobStatus{"missing"});
  msg = raw.receive(5000);
  REQUIRE(msg.has_value());
  CHECK(std::get<wire::Error>(*msg).code == "UNKNOWN_JOB");
}

TEST_CASE("an oversized frame gets an ERROR and the connection closes") {
  Loopback lb;
  auto sock = net::connect_to(lb.endpoint());
  const std::string block(1 << 20, 'a');
  std::size_t sent = 0;
  while (sent <= wire::kMaxLineBytes) {
    const ssize_t n = ::send(sock.fd(), block.data(), block.size(), MSG_NOSIGNAL);
    if (n <= 0) break;
    sent += static_cast<std::size_t>(n);
  }
  CHECK(sent > wire::kMaxLineBytes);
  const auto got = read_all(sock.fd());
  REQUIRE_FALSE(got.empty());
  const auto err = std::get<wire::Error>(wire::decode(got));
  CHECK(err.code == std::string(wire::kProtocolErrorCode));
}

TEST_CASE("the state file holds one status reply per job") {
  const auto path = std::filesystem::temp_directory_path() /
                    ("hetsched_state_" + std::to_string(::getpid()) + ".ndjson");
  {
    net::MasterOptions opts;
    opts.state_file = path;
    Loopback lb(opts);
    lb.add_worker("W1", false);
    net::MasterClient client(lb.endpoint());
    client.submit({"A", {{"a0", "noop", false, {}, {}}}});
    client.submit({"B", {{"b0", "noop", false, {}, {}}, {"b1", "bogus", false, {}, {}}}});
    client.wait("A", 5000);
    client.wait("B", 5000);
  }
  std::ifstream in(path);
  std::vector<wire::JobStatusReply> jobs;
  std::string line;
  while (std::getline(in, line)) jobs.push_back(std::get<wire::JobStatusReply>(wire::decode(line)));
  std::filesystem::remove(path);
  REQUIRE(jobs.size() == 2);
  CHECK(jobs[0].job_id == "A");
  CHECK(jobs[1].tasks.size() == 2);
  CHECK(jobs[1].tasks[0].state == TaskState::kCompleted);
  CHECK(jobs[1].tasks[1].state == TaskState::kFailed);
}

TEST_CASE("a worker that disconnects mid-task loses it to another worker") {
  Loopback lb;
  net::MasterClient client(lb.endpoint());
  // Hand-driven worker: registers, takes the dispatch, then drops the socket.
  {
    net::MessageStream fake(net::connect_to(lb.endpoint()));
    fake.send(wire::Register{"W0", 2400, false, std::nullopt, std::nullopt});
    REQUIRE(std::get<wire::RegisterAck>(*fake.receive(5000)).accepted);
    client.submit({"J", {{"t", "noop", false, {}, {}}}});
    const auto d = std::get<wire::Dispatch>(*fake.receive(5000));
    CHECK(d.task_id == "t");
    lb.add_worker("W2", false);
    CHECK(client.status("J").tasks[0].worker_id == "W0");
  }
  const auto reply = client.wait("J", 5000);
  REQUIRE(reply.tasks.size() == 1);
  CHECK(reply.tasks[0].state == TaskState::kCompleted);
  CHECK(reply.tasks[0].worker_id == "W2");
}
