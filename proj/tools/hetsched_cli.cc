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

#include <malloc.h>
#include <signal.h>
#include <unistd.h>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <thread>

#include "CLI11.hpp"
#include "hetsched/harness.h"
#include "hetsched/net.h"
#include "hetsched/sobel.h"

namespace fs = std::filesystem;
using namespace hetsched;

namespace {

constexpr int kExitTaskFailure = 1;
constexpr int kExitBind = 2;
constexpr int kExitConnect = 3;
constexpr int kExitUsage = static_cast<int>(CLI::ExitCodes::ValidationError);

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  ::sigaction(SIGINT, &sa, nullptr);
  ::sigaction(SIGTERM, &sa, nullptr);
}

Bytes read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path &path, const Bytes &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string default_job_id() {
  const auto t = std::chrono::system_clock::now().time_since_epoch() / std::chrono::milliseconds(1);
  return "job-" + std::to_string(::getpid()) + "-" + std::to_string(t);
}

const auto kDuration = CLI::AsNumberWithUnit(std::map<std::string, double>{{"ms", 1}, {"s", 1000}, {"m", 60000}});

struct MasterArgs {
  std::string listen = "0.0.0.0:7070";
  double heartbeat_ms = 2000;
  int liveness_misses = 3;
  double unschedulable_timeout_ms = 60000;
  std::string state_file;
  std::string port_file;
};

int run_master_cmd(const MasterArgs &a) {
  net::MasterOptions options;
  options.scheduler.listen_address = a.listen;
  options.scheduler.heartbeat_interval_ms = a.heartbeat_ms;
  options.scheduler.liveness_misses = a.liveness_misses;
  options.scheduler.unschedulable_timeout_ms = a.unschedulable_timeout_ms;
  if (auto why = options.scheduler.validate(); !why.empty()) {
    std::cerr << "error: " << why << "\n";
    return kExitUsage;
  }
  if (!a.state_file.empty()) options.state_file = a.state_file;
  if (!a.port_file.empty()) options.port_file = a.port_file;
  try {
    net::MasterServer server(options);
    std::cout << "master listening on port " << server.port() << "; eviction window "
              << options.scheduler.eviction_window_ms() << " ms" << std::endl;
    server.run(g_stop);
  } catch (const net::BindError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBind;
  }
  return 0;
}

struct WorkerArgs {
  worker::WorkerConfig config;
  std::int64_t gpu_cores = 0;
  std::int64_t gpu_mem_mb = 0;
  std::string ready_file;
};

int run_worker_cmd(WorkerArgs a, bool cores_set, bool mem_set) {
  if (cores_set) a.config.gpu_cores = a.gpu_cores;
  if (mem_set) a.config.gpu_mem_mb = a.gpu_mem_mb;
  if (auto why = a.config.validate(); !why.empty()) {
    std::cerr << "error: " << why << "\n";
    return kExitUsage;
  }
  // Keep freed image buffers on the heap; otherwise each multi-MB payload
  // is mmapped and faulted in again on every task.
  mallopt(M_MMAP_THRESHOLD, 512 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  std::function<void()> on_registered;
  if (!a.ready_file.empty()) {
    on_registered = [path = a.ready_file] { std::ofstream(path, std::ios::trunc) << "ok\n"; };
  }
  try {
    net::run_worker(a.config, g_stop, on_registered);
  } catch (const worker::RegistrationRejected &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTaskFailure;
  }
  return 0;
}

struct SubmitArgs {
  std::string master = "127.0.0.1:7070";
  std::string kind = "noop";
  bool gpu = false;
  std::vector<std::string> inputs;
  std::vector<std::string> params;
  int count = 1;
  std::string out_dir;
  double timeout_ms = -1;
  std::string job_id;
};

int run_submit_cmd(const SubmitArgs &a) {
  wire::Submit submit;
  submit.job_id = a.job_id.empty() ? default_job_id() : a.job_id;
  Params params;
  for (const auto &p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --param expects key=value, got '" << p << "'\n";
      return kExitUsage;
    }
    params[p.substr(0, eq)] = p.substr(eq + 1);
  }
  std::vector<Bytes> payloads;
  for (const auto &in : a.inputs) payloads.push_back(read_file(in));
  if (payloads.empty()) payloads.emplace_back();
  for (int c = 0; c < a.count; ++c) {
    for (const auto &payload : payloads) {
      const auto id = submit.job_id + "-t" + std::to_string(submit.tasks.size());
      submit.tasks.push_back({id, a.kind, a.gpu, params, payload});
    }
  }

  wire::JobStatusReply reply;
  try {
    net::MasterClient client(net::parse_endpoint(a.master));
    const auto ack = client.submit(submit);
    std::cout << "job " << ack.job_id << ": " << ack.accepted_count << " task(s) accepted"
              << std::endl;
    reply = client.wait(submit.job_id, a.timeout_ms);
  } catch (const net::ConnectError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConnect;
  }

  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
  bool all_ok = !reply.tasks.empty();
  for (const auto &t : reply.tasks) {
    std::printf("%s %s worker=%s", t.task_id.c_str(), std::string(to_string(t.state)).c_str(),
                t.worker_id.value_or("-").c_str());
    if (t.exec_ms) std::printf(" exec_ms=%.3f", *t.exec_ms);
    if (t.completed_ms && t.submitted_ms) {
      std::printf(" turnaround_ms=%.3f", *t.completed_ms - *t.submitted_ms);
    }
    if (t.error) std::printf(" error=%s", t.error->c_str());
    std::printf("\n");
    if (t.state != TaskState::kCompleted) {
      all_ok = false;
      continue;
    }
    if (!a.out_dir.empty() && t.output) write_file(fs::path(a.out_dir) / (t.task_id + ".pgm"), *t.output);
  }
  return all_ok ? 0 : kExitTaskFailure;
}

struct BenchArgs {
  std::string master;
  int local_workers = 0;
  std::vector<std::string> sizes;
  std::vector<std::string> images;
  std::size_t lanes = 4;
  int reps = 3;
  std::string csv;
};

int run_bench_cmd(const BenchArgs &a) {
  std::vector<harness::BenchImage> images;
  for (const auto &path : a.images) {
    images.push_back({fs::path(path).stem().string(), sobel::parse_pgm(read_file(path))});
  }
  for (const auto &s : a.sizes) {
    const auto x = s.find('x');
    if (x == std::string::npos) {
      std::cerr << "error: --sizes expects WxH, got '" << s << "'\n";
      return kExitUsage;
    }
    const auto w = std::stoul(s.substr(0, x));
    const auto h = std::stoul(s.substr(x + 1));
    images.push_back({s, sobel::synthetic_image(w, h, w * 131 + h)});
  }
  if (images.empty()) {
    std::cerr << "error: give --sizes and/or --images\n";
    return kExitUsage;
  }

  std::unique_ptr<harness::LocalCluster> cluster;
  std::string address = a.master;
  if (a.local_workers > 0) {
    std::vector<harness::LocalWorkerSpec> specs;
    for (int i = 0; i < a.local_workers; ++i) {
      specs.push_back({"W" + std::to_string(i + 1), 2400, i == 0, a.lanes});
    }
    cluster = std::make_unique<harness::LocalCluster>(fs::read_symlink("/proc/self/exe"), specs);
    if (!cluster->wait_ready(20000)) {
      std::cerr << "error: local workers did not register\n";
      return kExitConnect;
    }
    address = cluster->master_address();
  }
  if (address.empty()) {
    std::cerr << "error: give --master or --local-workers\n";
    return kExitUsage;
  }

  try {
    net::MasterClient client(net::parse_endpoint(address));
    harness::BenchOptions options;
    options.lane_count = a.lanes;
    options.repetitions = a.reps;
    const auto report = harness::run_bench(client, images, options);
    std::cout << report.table();
    if (!a.csv.empty()) {
      std::ofstream(a.csv, std::ios::trunc) << report.csv();
    }
  } catch (const net::ConnectError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConnect;
  } catch (const harness::IntegrityError &e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kExitTaskFailure;
  } catch (const std::runtime_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTaskFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("hetsched"));
  CLI::App app{"hetsched: GPU-aware master/worker task execution"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  MasterArgs margs;
  auto *master = app.add_subcommand("master", "Run the master service");
  master->add_option("--listen", margs.listen, "Listen address host:port")->capture_default_str();
  master->add_option("--heartbeat-ms", margs.heartbeat_ms, "Heartbeat interval (ms)")
      ->capture_default_str();
  master->add_option("--liveness-misses", margs.liveness_misses, "Missed beats before eviction")
      ->capture_default_str();
  master->add_option("--unschedulable-timeout-ms", margs.unschedulable_timeout_ms,
                     "Fail GPU tasks after this long with no GPU worker")
      ->capture_default_str();
  master->add_option("--state-file", margs.state_file, "Job-state dump written on shutdown");
  master->add_option("--port-file", margs.port_file, "File that receives the bound port");

  WorkerArgs wargs;
  wargs.config.master_address = "127.0.0.1:7070";
  wargs.config.cpu_mhz = 2400;
  wargs.config.lane_count = std::max(1u, std::thread::hardware_concurrency());
  auto *worker = app.add_subcommand("worker", "Run a worker agent");
  worker->add_option("--master", wargs.config.master_address, "Master address host:port")
      ->capture_default_str();
  worker->add_option("--id", wargs.config.worker_id, "Worker id")->required();
  worker->add_option("--mhz", wargs.config.cpu_mhz, "CPU capacity in MHz")->capture_default_str();
  auto *gpu_flag = worker->add_flag("--gpu", wargs.config.has_gpu, "Advertise GPU capability");
  auto *cores = worker->add_option("--gpu-cores", wargs.gpu_cores, "GPU core count")->needs(gpu_flag);
  auto *mem = worker->add_option("--gpu-mem-mb", wargs.gpu_mem_mb, "GPU memory (MB)")->needs(gpu_flag);
  worker->add_option("--lanes", wargs.config.lane_count, "Parallel executor lanes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  worker->add_option("--ready-file", wargs.ready_file, "File touched once registered");

  SubmitArgs sargs;
  auto *submit = app.add_subcommand("submit", "Submit a job and wait for it");
  submit->add_option("--master", sargs.master, "Master address host:port")->capture_default_str();
  submit->add_option("--kind", sargs.kind, "Workload kind")->capture_default_str();
  submit->add_flag("--gpu", sargs.gpu, "Tasks require a GPU worker");
  submit->add_option("--in", sargs.inputs, "Input file; one task per file");
  submit->add_option("--param", sargs.params, "Workload parameter key=value");
  submit->add_option("--count", sargs.count, "Copies of each task")->check(CLI::PositiveNumber);
  submit->add_option("--out", sargs.out_dir, "Directory for <task_id>.pgm outputs");
  submit->add_option("--timeout", sargs.timeout_ms, "Give up waiting after e.g. 5s or 500ms")
      ->transform(kDuration);
  submit->add_option("--job-id", sargs.job_id, "Job id (default: generated)");

  BenchArgs bargs;
  auto *bench = app.add_subcommand("bench", "Sequential vs. parallel Sobel timing report");
  auto *bmaster = bench->add_option("--master", bargs.master, "Master address host:port");
  bench->add_option("--local-workers", bargs.local_workers,
                    "Spawn a local master and N workers (W1 is GPU-tagged)")
      ->excludes(bmaster)
      ->check(CLI::Range(2, 64));
  bench->add_option("--sizes", bargs.sizes, "Synthetic image sizes WxH")->delimiter(',');
  bench->add_option("--images", bargs.images, "PGM files");
  bench->add_option("--lanes", bargs.lanes, "sobel_par lane count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--reps", bargs.reps, "Repetitions per image")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--csv", bargs.csv, "Also write the report as CSV");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  install_signal_handlers();

  try {
    if (*master) return run_master_cmd(margs);
    if (*worker) return run_worker_cmd(wargs, cores->count() > 0, mem->count() > 0);
    if (*submit) return run_submit_cmd(sargs);
    if (*bench) return run_bench_cmd(bargs);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTaskFailure;
  }
  return 0;
}
