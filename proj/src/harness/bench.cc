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

#include <fmt/format.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "hetsched/harness.h"

namespace hetsched::harness {

namespace {

constexpr Millis kOverheadQuietMs = 20;

struct Run {
  Millis exec_ms = 0;
  Millis turnaround_ms = 0;
  Bytes output;
};

std::string unique_prefix() {
  static int counter = 0;
  const auto t = std::chrono::steady_clock::now().time_since_epoch().count();
  return fmt::format("b{}-{:x}-{}", ::getpid(), static_cast<unsigned long long>(t), counter++);
}

// `quiet_ms`: how long to stay off the connection after submitting, so the
// first status poll does not compete with a short task for the CPU.
Run run_one(net::MasterClient &client, const std::string &job_id, const std::string &kind,
            bool requires_gpu, const Params &params, const Bytes &payload, Millis timeout_ms,
            Millis quiet_ms = 0) {
  wire::Submit submit;
  submit.job_id = job_id;
  submit.tasks.push_back({job_id + "-t0", kind, requires_gpu, params, payload});
  const auto ack = client.submit(submit);
  if (ack.accepted_count != 1) throw std::runtime_error("master rejected task " + job_id);
  if (quiet_ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(quiet_ms));
  const auto reply = client.wait(job_id, timeout_ms);
  if (reply.tasks.size() != 1) throw std::runtime_error("job " + job_id + " has no task");
  const auto &t = reply.tasks.front();
  if (t.state != TaskState::kCompleted) {
    throw std::runtime_error(fmt::format("task {} ended {}: {}", t.task_id, to_string(t.state),
                                         t.error.value_or("timed out")));
  }
  TimingRecord timing{t.submitted_ms, t.dispatched_ms, t.completed_ms, t.exec_ms};
  Run run;
  run.exec_ms = *t.exec_ms;
  run.turnaround_ms = *t.completed_ms - *t.submitted_ms;
  (void)overhead_ms(timing);  // throws if a timestamp is missing
  run.output = t.output.value_or(Bytes{});
  return run;
}

}  // namespace

BenchReport run_bench(net::MasterClient &client, const std::vector<BenchImage> &images,
                      const BenchOptions &options) {
  BenchReport report;
  const Params par_params{{"lane_count", std::to_string(options.lane_count)}};
  for (const auto &image : images) {
    const Bytes payload = sobel::write_pgm(image.image);
    BenchRow row;
    row.label = image.label;
    row.m = image.image.width();
    row.n = image.image.height();
    std::optional<Run> best_seq;
    std::optional<Run> best_par;
    for (int rep = 0; rep < std::max(1, options.repetitions); ++rep) {
      const auto prefix = unique_prefix();
      auto seq = run_one(client, prefix + "-seq", "sobel_seq", false, {}, payload,
                         options.task_timeout_ms);
      auto par = run_one(client, prefix + "-par", "sobel_par", true, par_params, payload,
                         options.task_timeout_ms);
      if (seq.output != par.output) {
        throw IntegrityError("sobel_seq and sobel_par outputs differ for " + image.label);
      }
      if (!best_seq || seq.exec_ms < best_seq->exec_ms) best_seq = std::move(seq);
      if (!best_par || par.exec_ms < best_par->exec_ms) best_par = std::move(par);
    }
    row.seq_exec_ms = best_seq->exec_ms;
    row.par_exec_ms = best_par->exec_ms;
    row.turnaround_ms = best_par->turnaround_ms;
    row.overhead_ms = row.turnaround_ms - row.par_exec_ms;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<Millis> measure_overhead(net::MasterClient &client, const std::string &kind,
                                     bool requires_gpu, const Params &params,
                                     const Bytes &payload, int count, Millis task_timeout_ms) {
  std::vector<Millis> out;
  for (int i = 0; i < count; ++i) {
    const auto run = run_one(client, unique_prefix() + "-ovh", kind, requires_gpu, params,
                             payload, task_timeout_ms, kOverheadQuietMs);
    out.push_back(run.turnaround_ms - run.exec_ms);
  }
  return out;
}

double coefficient_of_variation(const std::vector<Millis> &values) {
  if (values.empty()) return 0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= values.size();
  return mean == 0 ? 0 : std::sqrt(var) / mean;
}

std::string BenchReport::table() const {
  std::string out = fmt::format("{:<14} {:>11} {:>13} {:>13} {:>15} {:>13}\n", "image", "m x n",
                                "seq_exec_ms", "par_exec_ms", "turnaround_ms", "overhead_ms");
  for (const auto &r : rows) {
    out += fmt::format("{:<14} {:>11} {:>13.3f} {:>13.3f} {:>15.3f} {:>13.3f}\n", r.label,
                       fmt::format("{}x{}", r.m, r.n), r.seq_exec_ms, r.par_exec_ms,
                       r.turnaround_ms, r.overhead_ms);
  }
  return out;
}

std::string BenchReport::csv() const {
  std::string out = "label,m,n,seq_exec_ms,par_exec_ms,turnaround_ms,overhead_ms\n";
  for (const auto &r : rows) {
    out += fmt::format("{},{},{},{:.3f},{:.3f},{:.3f},{:.3f}\n", r.label, r.m, r.n, r.seq_exec_ms,
                       r.par_exec_ms, r.turnaround_ms, r.overhead_ms);
  }
  return out;
}

}  // namespace hetsched::harness
