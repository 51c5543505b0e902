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

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>

#include "hetsched/net.h"

namespace hetsched::net {

Endpoint parse_endpoint(std::string_view text) {
  Endpoint ep;
  std::string_view port_text;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
      throw std::invalid_argument("bad endpoint '" + std::string(text) + "'");
    }
    ep.host = std::string(text.substr(1, close - 1));
    port_text = text.substr(close + 2);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("endpoint '" + std::string(text) + "' has no port");
    }
    ep.host = std::string(text.substr(0, colon));
    port_text = text.substr(colon + 1);
  }
  if (port_text.empty()) throw std::invalid_argument("endpoint has empty port");
  unsigned long port = 0;
  for (char c : port_text) {
    if (c < '0' || c > '9') throw std::invalid_argument("endpoint port is not a number");
    port = port * 10 + static_cast<unsigned long>(c - '0');
    if (port > 65535) throw std::invalid_argument("endpoint port out of range");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

Socket &Socket::operator=(Socket &&other) noexcept {
  if (this != &other) {
    reset();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Socket::~Socket() { reset(); }

void Socket::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

namespace {

struct AddrInfoDeleter {
  void operator()(addrinfo *ai) const { freeaddrinfo(ai); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Endpoint &ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const std::string port = std::to_string(ep.port);
  addrinfo *result = nullptr;
  const char *host = ep.host.empty() ? nullptr : ep.host.c_str();
  if (!passive && host == nullptr) host = "127.0.0.1";
  if (int rc = getaddrinfo(host, port.c_str(), &hints, &result); rc != 0) {
    throw std::runtime_error("cannot resolve '" + ep.host + "': " + gai_strerror(rc));
  }
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(result);
}

}  // namespace

Socket listen_on(const Endpoint &endpoint) {
  auto addrs = resolve(endpoint, true);
  std::string last_error = "no addresses";
  for (addrinfo *ai = addrs.get(); ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) {
      last_error = std::strerror(errno);
      continue;
    }
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), 64) != 0) {
      last_error = std::strerror(errno);
      continue;
    }
    return s;
  }
  throw BindError("cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) +
                  ": " + last_error);
}

std::uint16_t local_port(const Socket &socket) {
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(socket.fd(), reinterpret_cast<sockaddr *>(&addr), &len) != 0) return 0;
  if (addr.ss_family == AF_INET) {
    return ntohs(reinterpret_cast<sockaddr_in *>(&addr)->sin_port);
  }
  return ntohs(reinterpret_cast<sockaddr_in6 *>(&addr)->sin6_port);
}

Socket connect_to(const Endpoint &endpoint) {
  std::unique_ptr<addrinfo, AddrInfoDeleter> addrs;
  try {
    addrs = resolve(endpoint, false);
  } catch (const std::runtime_error &e) {
    throw ConnectError(e.what());
  }
  std::string last_error = "no addresses";
  for (addrinfo *ai = addrs.get(); ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return s;
    }
    last_error = std::strerror(errno);
  }
  throw ConnectError("cannot connect to " + endpoint.host + ":" +
                     std::to_string(endpoint.port) + ": " + last_error);
}

MessageStream::MessageStream(Socket socket) : socket_(std::move(socket)) {}

void MessageStream::send(const wire::Message &msg) {
  const std::string bytes = wire::encode(msg);
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(socket_.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConnectError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<wire::Message> MessageStream::receive(int timeout_ms) {
  char chunk[1 << 16];
  while (true) {
    if (auto line = reader_.next()) return wire::decode(*line);
    pollfd pfd{socket_.fd(), POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ConnectError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) return std::nullopt;
    const ssize_t n = ::recv(socket_.fd(), chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ConnectError(std::string("recv failed: ") + std::strerror(errno));
    }
    if (n == 0) throw ConnectError("connection closed by peer");
    try {
      reader_.feed(std::string_view(chunk, static_cast<std::size_t>(n)));
    } catch (const wire::ProtocolError &e) {
      socket_.reset();
      throw ConnectError(std::string("closing connection: ") + e.what());
    }
  }
}

}  // namespace hetsched::net
