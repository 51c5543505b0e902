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

#include <cmath>
#include <stdexcept>

#include "hetsched/harness.h"

namespace hetsched::harness {

// One direction of an in-memory connection. Senders append encoded frames;
// the receiver feeds the accumulated bytes through a FrameReader exactly as
// it would a socket read.
struct InProcCluster::Pipe {
  std::string pending;
  wire::FrameReader reader;

  std::vector<wire::Message> take() {
    std::vector<wire::Message> out;
    if (!pending.empty()) {
      reader.feed(pending);
      pending.clear();
    }
    while (auto line = reader.next()) out.push_back(wire::decode(*line));
    return out;
  }
  void clear() {
    pending.clear();
    reader = wire::FrameReader();
  }
};

struct InProcCluster::WorkerNode {
  explicit WorkerNode(worker::WorkerConfig config)
      : agent(std::move(config)), registry(worker::builtin_registry(agent.config().lane_count)) {
    // Sleep is modeled in logical time; see run_executions.
    registry.add("sleep", [](const Params &, std::span<const std::uint8_t>) { return Bytes{}; });
  }

  worker::WorkerAgent agent;
  worker::ExecutorRegistry registry;
  master::ConnId conn = 0;
  Pipe up;
  Pipe down;
  bool alive = true;
  bool held = false;
  std::optional<wire::Dispatch> running;
  Millis started_at = 0;
  Millis finish_at = 0;
};

namespace {

Millis logical_duration(const wire::Dispatch &d) {
  if (d.kind != "sleep") return 0;
  auto it = d.params.find("duration_ms");
  if (it == d.params.end()) return 0;
  try {
    return std::max(0.0, std::stod(it->second));
  } catch (const std::exception &) {
    return 0;
  }
}

}  // namespace

InProcCluster::InProcCluster() : InProcCluster(Options{}) {}

InProcCluster::InProcCluster(Options options)
    : options_(std::move(options)),
      master_(std::make_unique<master::MasterNode>(options_.scheduler)),
      client_up_(std::make_unique<Pipe>()),
      client_down_(std::make_unique<Pipe>()) {
  if (auto why = options_.scheduler.validate(); !why.empty()) throw std::invalid_argument(why);
  if (!(options_.step_ms > 0)) throw std::invalid_argument("step_ms must be positive");
  client_conn_ = next_conn_++;
}

InProcCluster::~InProcCluster() = default;

InProcCluster::WorkerNode &InProcCluster::node(const WorkerId &id) {
  for (auto &w : workers_) {
    if (w->agent.config().worker_id == id) return *w;
  }
  throw std::out_of_range("no worker '" + id + "'");
}

const InProcCluster::WorkerNode &InProcCluster::node(const WorkerId &id) const {
  for (const auto &w : workers_) {
    if (w->agent.config().worker_id == id) return *w;
  }
  throw std::out_of_range("no worker '" + id + "'");
}

void InProcCluster::send(Pipe &pipe, const wire::Message &msg, const std::string &from,
                         const std::string &to) {
  std::string bytes = wire::encode(msg);
  pipe.pending += bytes;
  trace_.push_back({now_, from, to, std::move(bytes)});
}

void InProcCluster::add_worker(worker::WorkerConfig config) {
  auto w = std::make_unique<WorkerNode>(std::move(config));
  w->conn = next_conn_++;
  auto &ref = *w;
  workers_.push_back(std::move(w));
  send(ref.up, ref.agent.registration(now_), ref.agent.config().worker_id, "master");
  run_until_idle();
}

void InProcCluster::kill_worker(const WorkerId &id) {
  auto &w = node(id);
  w.alive = false;
  w.running.reset();
  w.up.clear();
  w.down.clear();
}

void InProcCluster::hold_worker(const WorkerId &id, bool held) {
  node(id).held = held;
  if (!held) run_until_idle();
}

bool InProcCluster::worker_alive(const WorkerId &id) const { return node(id).alive; }

bool InProcCluster::worker_busy(const WorkerId &id) const { return node(id).agent.busy(); }

std::vector<WorkerId> InProcCluster::live_workers() const {
  std::vector<WorkerId> out;
  for (const auto &w : workers_) {
    if (w->alive) out.push_back(w->agent.config().worker_id);
  }
  return out;
}

void InProcCluster::restart_master() {
  master_ = std::make_unique<master::MasterNode>(options_.scheduler);
  client_up_->clear();
  client_down_->clear();
  for (auto &w : workers_) {
    w->up.clear();
    w->down.clear();
  }
}

void InProcCluster::deliver_master(std::vector<master::Outbound> outbound) {
  for (auto &o : outbound) {
    if (o.conn == client_conn_) {
      send(*client_down_, o.msg, "master", "client");
      continue;
    }
    for (auto &w : workers_) {
      if (w->conn == o.conn) {
        send(w->down, o.msg, "master", w->agent.config().worker_id);
        break;
      }
    }
  }
}

bool InProcCluster::drain_to_master() {
  bool progress = false;
  for (auto &msg : client_up_->take()) {
    progress = true;
    deliver_master(master_->on_message(client_conn_, msg, now_));
  }
  for (std::size_t i = 0; i < workers_.size(); ++i) {
    auto &w = *workers_[i];
    if (!w.alive) continue;
    for (auto &msg : w.up.take()) {
      progress = true;
      deliver_master(master_->on_message(w.conn, msg, now_));
    }
  }
  return progress;
}

bool InProcCluster::drain_to_workers() {
  bool progress = false;
  for (auto &wp : workers_) {
    auto &w = *wp;
    if (!w.alive) continue;
    const auto &id = w.agent.config().worker_id;
    for (auto &msg : w.down.take()) {
      progress = true;
      if (const auto *d = std::get_if<wire::Dispatch>(&msg)) received_[id].push_back(*d);
      for (auto &reply : w.agent.on_message(msg, now_)) send(w.up, reply, id, "master");
      if (auto d = w.agent.take_dispatch()) {
        w.running = std::move(*d);
        w.started_at = now_;
        w.finish_at = now_ + logical_duration(*w.running);
      }
    }
  }
  return progress;
}

bool InProcCluster::drain_to_client() {
  auto msgs = client_down_->take();
  for (auto &m : msgs) client_inbox_.push_back(std::move(m));
  return !msgs.empty();
}

bool InProcCluster::run_executions() {
  bool progress = false;
  for (auto &wp : workers_) {
    auto &w = *wp;
    if (!w.alive || w.held || !w.running || w.finish_at > now_) continue;
    progress = true;
    const auto &id = w.agent.config().worker_id;
    executions_.push_back({id, w.running->task_id, true});
    auto result = worker::execute_task(w.registry, *w.running, id, [this] { return now_; });
    result.exec_ms = now_ - w.started_at;
    executions_.push_back({id, w.running->task_id, false});
    w.running.reset();
    send(w.up, w.agent.finish(std::move(result)), id, "master");
  }
  return progress;
}

void InProcCluster::run_until_idle() {
  while (true) {
    bool progress = drain_to_master();
    progress |= drain_to_workers();
    progress |= drain_to_client();
    progress |= run_executions();
    if (!progress) return;
  }
}

void InProcCluster::advance(Millis duration) {
  const auto steps = static_cast<long long>(std::ceil(duration / options_.step_ms - 1e-9));
  for (long long s = 0; s < steps; ++s) {
    now_ += options_.step_ms;
    for (auto &wp : workers_) {
      auto &w = *wp;
      if (!w.alive || !w.agent.heartbeat_due(now_)) continue;
      const auto &id = w.agent.config().worker_id;
      send(w.up, w.agent.registered() ? w.agent.heartbeat_tick(now_) : w.agent.registration(now_),
           id, "master");
    }
    run_until_idle();
    deliver_master(master_->tick(now_));
    run_until_idle();
  }
}

wire::SubmitAck InProcCluster::submit(const wire::Submit &submit) {
  send(*client_up_, submit, "client", "master");
  run_until_idle();
  for (auto it = client_inbox_.begin(); it != client_inbox_.end(); ++it) {
    if (auto *ack = std::get_if<wire::SubmitAck>(&*it)) {
      auto out = std::move(*ack);
      client_inbox_.erase(it);
      return out;
    }
    if (auto *err = std::get_if<wire::Error>(&*it)) {
      const auto text = err->code + ": " + err->detail;
      client_inbox_.erase(it);
      throw std::runtime_error(text);
    }
  }
  throw std::runtime_error("no SUBMIT_ACK");
}

wire::JobStatusReply InProcCluster::status(const JobId &job) {
  send(*client_up_, wire::JobStatus{job}, "client", "master");
  run_until_idle();
  for (auto it = client_inbox_.begin(); it != client_inbox_.end(); ++it) {
    if (auto *reply = std::get_if<wire::JobStatusReply>(&*it)) {
      auto out = std::move(*reply);
      client_inbox_.erase(it);
      return out;
    }
    if (auto *err = std::get_if<wire::Error>(&*it)) {
      const auto text = err->code + ": " + err->detail;
      client_inbox_.erase(it);
      throw std::runtime_error(text);
    }
  }
  throw std::runtime_error("no JOB_STATUS_REPLY");
}

std::vector<WireRecord> InProcCluster::dispatch_trace() const {
  static const std::string prefix = R"({"type":"DISPATCH")";
  std::vector<WireRecord> out;
  for (const auto &r : trace_) {
    if (r.from == "master" && r.bytes.compare(0, prefix.size(), prefix) == 0) out.push_back(r);
  }
  return out;
}

}  // namespace hetsched::harness
