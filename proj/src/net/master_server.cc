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

#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>

#include "hetsched/net.h"

namespace hetsched::net {

namespace {

struct Connection {
  Socket socket;
  wire::FrameReader reader;
  std::string outbox;
  std::size_t out_offset = 0;
  // Set after a framing error: further input is discarded, the ERROR is
  // flushed, then the write side is shut down until the peer closes.
  bool close_after_flush = false;
  bool write_shut = false;
  Millis close_deadline = 0;
};

constexpr Millis kCloseGraceMs = 2000;

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

void write_state_file(const std::filesystem::path &path,
                      const std::vector<wire::JobStatusReply> &jobs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write state file " + path.string());
  for (const auto &job : jobs) out << wire::encode(job);
}

MasterServer::MasterServer(MasterOptions options) : options_(std::move(options)) {
  if (auto why = options_.scheduler.validate(); !why.empty()) {
    throw std::invalid_argument(why);
  }
  listener_ = listen_on(parse_endpoint(options_.scheduler.listen_address));
  set_nonblocking(listener_.fd());
  port_ = local_port(listener_);
  if (options_.port_file) {
    const auto tmp = options_.port_file->string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << port_ << "\n";
    }
    std::filesystem::rename(tmp, *options_.port_file);
  }
}

MasterServer::~MasterServer() = default;

void MasterServer::run(const std::atomic<bool> &stop) {
  master::MasterNode node(options_.scheduler);
  std::map<master::ConnId, Connection> conns;
  master::ConnId next_id = 1;
  const Millis tick_every = std::min(Millis{100}, options_.scheduler.heartbeat_interval_ms);
  Millis next_tick = worker::process_clock_ms() + tick_every;

  const auto deliver = [&](std::vector<master::Outbound> outbound) {
    for (auto &o : outbound) {
      auto it = conns.find(o.conn);
      if (it == conns.end()) continue;
      it->second.outbox += wire::encode(o.msg);
    }
  };

  const auto drop = [&](master::ConnId id) {
    conns.erase(id);
    deliver(node.on_disconnect(id, worker::process_clock_ms()));
  };

  std::vector<pollfd> fds;
  std::vector<master::ConnId> ids;
  char chunk[1 << 16];

  while (!stop.load()) {
    fds.clear();
    ids.clear();
    fds.push_back({listener_.fd(), POLLIN, 0});
    ids.push_back(0);
    for (auto &[id, c] : conns) {
      short events = POLLIN;
      if (c.out_offset < c.outbox.size()) events |= POLLOUT;
      fds.push_back({c.socket.fd(), events, 0});
      ids.push_back(id);
    }

    const Millis now = worker::process_clock_ms();
    const int wait = static_cast<int>(std::clamp(next_tick - now, Millis{0}, Millis{100}));
    const int rc = ::poll(fds.data(), fds.size(), wait);
    if (rc < 0 && errno != EINTR) throw std::runtime_error(std::strerror(errno));

    if (worker::process_clock_ms() >= next_tick) {
      deliver(node.tick(worker::process_clock_ms()));
      next_tick = worker::process_clock_ms() + tick_every;
    }
    for (auto it = conns.begin(); it != conns.end();) {
      const auto id = (it++)->first;
      const auto &c = conns.at(id);
      if (c.close_after_flush && worker::process_clock_ms() >= c.close_deadline) drop(id);
    }
    if (rc <= 0) continue;

    if (fds[0].revents & POLLIN) {
      while (true) {
        int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
        if (fd < 0) break;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        conns.emplace(next_id++, Connection{Socket(fd), wire::FrameReader(), {}, 0, false, false, 0});
      }
    }

    for (std::size_t i = 1; i < fds.size(); ++i) {
      const auto id = ids[i];
      auto it = conns.find(id);
      if (it == conns.end()) continue;
      auto &c = it->second;
      const short rev = fds[i].revents;
      bool dead = false;

      if (rev & (POLLIN | POLLHUP | POLLERR)) {
        while (!dead) {
          const ssize_t n = ::recv(c.socket.fd(), chunk, sizeof(chunk), 0);
          if (n > 0) {
            if (c.close_after_flush) continue;
            try {
              c.reader.feed(std::string_view(chunk, static_cast<std::size_t>(n)));
            } catch (const wire::ProtocolError &e) {
              c.outbox += wire::encode(wire::Error{e.code(), e.what()});
              c.close_after_flush = true;
              c.close_deadline = worker::process_clock_ms() + kCloseGraceMs;
            }
            continue;
          }
          if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) dead = true;
          break;
        }
        while (auto line = c.reader.next()) {
          try {
            auto msg = wire::decode(*line);
            deliver(node.on_message(id, msg, worker::process_clock_ms()));
          } catch (const wire::ProtocolError &e) {
            c.outbox += wire::encode(wire::Error{e.code(), e.what()});
          }
        }
      }

      if (!dead && c.out_offset < c.outbox.size()) {
        const ssize_t n = ::send(c.socket.fd(), c.outbox.data() + c.out_offset,
                                 c.outbox.size() - c.out_offset, MSG_NOSIGNAL);
        if (n > 0) {
          c.out_offset += static_cast<std::size_t>(n);
          if (c.out_offset == c.outbox.size()) {
            c.outbox.clear();
            c.out_offset = 0;
          }
        } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
          dead = true;
        }
      }
      if (!dead && c.close_after_flush) {
        if (c.outbox.empty() && !c.write_shut) {
          ::shutdown(c.socket.fd(), SHUT_WR);
          c.write_shut = true;
        }
        if (worker::process_clock_ms() >= c.close_deadline) dead = true;
      }
      if (dead) drop(id);
    }
  }

  if (options_.state_file) {
    write_state_file(*options_.state_file, node.snapshot());
    spdlog::info("wrote job state to {}", options_.state_file->string());
  }
}

}  // namespace hetsched::net
