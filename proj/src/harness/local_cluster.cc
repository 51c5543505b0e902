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
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "hetsched/harness.h"

extern char **environ;

namespace hetsched::harness {

namespace {

using Clock = std::chrono::steady_clock;

bool wait_until(Millis timeout_ms, const std::function<bool()> &done) {
  const auto deadline = Clock::now() + std::chrono::microseconds(
                                           static_cast<std::int64_t>(timeout_ms * 1000));
  while (Clock::now() < deadline) {
    if (done()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return done();
}

void terminate(pid_t pid) {
  ::kill(pid, SIGTERM);
  const bool exited = wait_until(5000, [pid] {
    int status = 0;
    return ::waitpid(pid, &status, WNOHANG) == pid;
  });
  if (!exited) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
  }
}

}  // namespace

LocalCluster::LocalCluster(const std::filesystem::path &cli,
                           const std::vector<LocalWorkerSpec> &workers, Millis heartbeat_ms) {
  std::string tmpl = (std::filesystem::temp_directory_path() / "hetsched-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  dir_ = tmpl;

  const auto port_file = dir_ / "master.port";
  children_.push_back(spawn({cli.string(), "master", "--listen", "127.0.0.1:0", "--port-file",
                             port_file.string(), "--heartbeat-ms",
                             std::to_string(static_cast<long long>(heartbeat_ms))}));
  const bool up = wait_until(10000, [&] { return std::filesystem::exists(port_file); });
  if (!up) {
    for (auto pid : children_) terminate(pid);
    throw std::runtime_error("master did not start; see " + (dir_ / "0.log").string());
  }
  std::ifstream(port_file) >> port_;

  for (const auto &w : workers) {
    auto ready = dir_ / (w.id + ".ready");
    std::vector<std::string> args{cli.string(), "worker",  "--master",
                                  master_address(), "--id", w.id,
                                  "--mhz",          std::to_string(w.mhz),
                                  "--lanes",        std::to_string(w.lanes),
                                  "--ready-file",   ready.string()};
    if (w.gpu) args.push_back("--gpu");
    children_.push_back(spawn(args));
    ready_files_.push_back(std::move(ready));
  }
}

LocalCluster::~LocalCluster() {
  for (auto it = children_.rbegin(); it != children_.rend(); ++it) terminate(*it);
  std::error_code ec;
  if (std::getenv("HETSCHED_KEEP_LOGS") == nullptr) std::filesystem::remove_all(dir_, ec);
}

std::string LocalCluster::master_address() const {
  return "127.0.0.1:" + std::to_string(port_);
}

bool LocalCluster::wait_ready(Millis timeout_ms) {
  return wait_until(timeout_ms, [this] {
    for (const auto &f : ready_files_) {
      if (!std::filesystem::exists(f)) return false;
    }
    return true;
  });
}

pid_t LocalCluster::spawn(const std::vector<std::string> &args) {
  std::vector<char *> argv;
  for (const auto &a : args) argv.push_back(const_cast<char *>(a.c_str()));
  argv.push_back(nullptr);

  const auto log = (dir_ / (std::to_string(children_.size()) + ".log")).string();
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error("cannot spawn " + args[0]);
  return pid;
}

}  // namespace hetsched::harness
