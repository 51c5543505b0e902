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

#include "json.hpp"

#include "hetsched/protocol.h"

namespace hetsched::wire {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void fail(const std::string &detail) {
  throw ProtocolError(std::string(kProtocolErrorCode), detail);
}

std::string_view status_name(HeartbeatStatus s) {
  return s == HeartbeatStatus::kOk ? "OK" : "NOT_REGISTERED";
}

std::string_view status_name(ResultStatus s) {
  return s == ResultStatus::kOk ? "OK" : "FAILED";
}

json params_json(const Params &params) {
  json out = json::object();
  for (const auto &[k, v] : params) out[k] = v;
  return out;
}

template <class T>
void put_optional(json &j, const char *key, const std::optional<T> &value) {
  if (value) j[key] = *value;
}

void put_optional_bytes(json &j, const char *key, const std::optional<Bytes> &value) {
  if (value) j[key] = base64_encode(*value);
}

json task_spec_json(const TaskSpec &t) {
  return {{"task_id", t.task_id},
          {"kind", t.kind},
          {"requires_gpu", t.requires_gpu},
          {"params", params_json(t.params)},
          {"payload_b64", base64_encode(t.payload)}};
}

json task_status_json(const TaskStatus &t) {
  json j = {{"task_id", t.task_id}, {"state", std::string(to_string(t.state))}};
  put_optional(j, "worker_id", t.worker_id);
  put_optional(j, "submitted_ms", t.submitted_ms);
  put_optional(j, "dispatched_ms", t.dispatched_ms);
  put_optional(j, "completed_ms", t.completed_ms);
  put_optional(j, "exec_ms", t.exec_ms);
  put_optional_bytes(j, "output_b64", t.output);
  put_optional(j, "error", t.error);
  return j;
}

json body(const Message &m) {
  return std::visit(
      Overloaded{
          [](const Register &r) {
            json j = {{"worker_id", r.worker_id},
                      {"cpu_mhz", r.cpu_mhz},
                      {"has_gpu", r.has_gpu}};
            put_optional(j, "gpu_cores", r.gpu_cores);
            put_optional(j, "gpu_mem_mb", r.gpu_mem_mb);
            return j;
          },
          [](const RegisterAck &r) {
            json j = {{"accepted", r.accepted},
                      {"heartbeat_interval_ms", r.heartbeat_interval_ms}};
            put_optional(j, "reason", r.reason);
            return j;
          },
          [](const Heartbeat &h) {
            return json{{"worker_id", h.worker_id}, {"ts_ms", h.ts_ms}, {"busy", h.busy}};
          },
          [](const HeartbeatAck &h) {
            return json{{"status", std::string(status_name(h.status))}};
          },
          [](const Dispatch &d) {
            return json{{"task_id", d.task_id},
                        {"kind", d.kind},
                        {"requires_gpu", d.requires_gpu},
                        {"params", params_json(d.params)},
                        {"payload_b64", base64_encode(d.payload)}};
          },
          [](const Result &r) {
            json j = {{"task_id", r.task_id},
                      {"worker_id", r.worker_id},
                      {"status", std::string(status_name(r.status))},
                      {"exec_ms", r.exec_ms}};
            put_optional_bytes(j, "output_b64", r.output);
            put_optional(j, "error", r.error);
            return j;
          },
          [](const Submit &s) {
            json tasks = json::array();
            for (const auto &t : s.tasks) tasks.push_back(task_spec_json(t));
            return json{{"job_id", s.job_id}, {"tasks", std::move(tasks)}};
          },
          [](const SubmitAck &s) {
            return json{{"job_id", s.job_id}, {"accepted_count", s.accepted_count}};
          },
          [](const JobStatus &s) { return json{{"job_id", s.job_id}}; },
          [](const JobStatusReply &s) {
            json tasks = json::array();
            for (const auto &t : s.tasks) tasks.push_back(task_status_json(t));
            return json{{"job_id", s.job_id}, {"tasks", std::move(tasks)}};
          },
          [](const Error &e) { return json{{"code", e.code}, {"detail", e.detail}}; },
      },
      m);
}

// Field readers. Every failure names the offending field.

const json &field(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

[[noreturn]] void wrong_type(const char *key) {
  fail(std::string("field '") + key + "' has wrong type");
}

std::string read_string(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (!v.is_string()) wrong_type(key);
  return v.get<std::string>();
}

bool read_bool(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (!v.is_boolean()) wrong_type(key);
  return v.get<bool>();
}

std::int64_t read_int(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (v.is_number_integer()) {
    if (v.is_number_unsigned() &&
        v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      wrong_type(key);
    }
    return v.get<std::int64_t>();
  }
  wrong_type(key);
}

Millis read_number(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (!v.is_number()) wrong_type(key);
  return v.get<double>();
}

Bytes read_b64(const json &j, const char *key) {
  auto text = read_string(j, key);
  auto bytes = base64_decode(text);
  if (!bytes) fail(std::string("field '") + key + "' is not valid base64");
  return std::move(*bytes);
}

Params read_params(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (!v.is_object()) wrong_type(key);
  Params out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (!it.value().is_string()) wrong_type(key);
    out.emplace(it.key(), it.value().get<std::string>());
  }
  return out;
}

const json &read_array(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (!v.is_array()) wrong_type(key);
  return v;
}

template <class F>
auto optional_field(const json &j, const char *key, F read)
    -> std::optional<decltype(read(j, key))> {
  if (!j.contains(key)) return std::nullopt;
  return read(j, key);
}

const json &object_at(const json &v, const char *what) {
  if (!v.is_object()) fail(std::string(what) + " entry is not an object");
  return v;
}

TaskSpec read_task_spec(const json &v) {
  const auto &j = object_at(v, "tasks");
  return {read_string(j, "task_id"), read_string(j, "kind"), read_bool(j, "requires_gpu"),
          read_params(j, "params"), read_b64(j, "payload_b64")};
}

TaskStatus read_task_status(const json &v) {
  const auto &j = object_at(v, "tasks");
  TaskStatus t;
  t.task_id = read_string(j, "task_id");
  auto state = parse_task_state(read_string(j, "state"));
  if (!state) fail("field 'state' has unknown value");
  t.state = *state;
  t.worker_id = optional_field(j, "worker_id", read_string);
  t.submitted_ms = optional_field(j, "submitted_ms", read_number);
  t.dispatched_ms = optional_field(j, "dispatched_ms", read_number);
  t.completed_ms = optional_field(j, "completed_ms", read_number);
  t.exec_ms = optional_field(j, "exec_ms", read_number);
  t.output = optional_field(j, "output_b64", read_b64);
  t.error = optional_field(j, "error", read_string);
  return t;
}

Message decode_body(const std::string &type, const json &j) {
  if (type == "REGISTER") {
    return Register{read_string(j, "worker_id"), read_int(j, "cpu_mhz"),
                    read_bool(j, "has_gpu"), optional_field(j, "gpu_cores", read_int),
                    optional_field(j, "gpu_mem_mb", read_int)};
  }
  if (type == "REGISTER_ACK") {
    return RegisterAck{read_bool(j, "accepted"), read_int(j, "heartbeat_interval_ms"),
                       optional_field(j, "reason", read_string)};
  }
  if (type == "HEARTBEAT") {
    return Heartbeat{read_string(j, "worker_id"), read_int(j, "ts_ms"),
                     read_bool(j, "busy")};
  }
  if (type == "HEARTBEAT_ACK") {
    const auto status = read_string(j, "status");
    if (status == "OK") return HeartbeatAck{HeartbeatStatus::kOk};
    if (status == "NOT_REGISTERED") return HeartbeatAck{HeartbeatStatus::kNotRegistered};
    fail("field 'status' has unknown value");
  }
  if (type == "DISPATCH") {
    return Dispatch{read_string(j, "task_id"), read_string(j, "kind"),
                    read_bool(j, "requires_gpu"), read_params(j, "params"),
                    read_b64(j, "payload_b64")};
  }
  if (type == "RESULT") {
    Result r;
    r.task_id = read_string(j, "task_id");
    r.worker_id = read_string(j, "worker_id");
    const auto status = read_string(j, "status");
    if (status == "OK") {
      r.status = ResultStatus::kOk;
    } else if (status == "FAILED") {
      r.status = ResultStatus::kFailed;
    } else {
      fail("field 'status' has unknown value");
    }
    r.exec_ms = read_number(j, "exec_ms");
    r.output = optional_field(j, "output_b64", read_b64);
    r.error = optional_field(j, "error", read_string);
    return r;
  }
  if (type == "SUBMIT") {
    Submit s;
    s.job_id = read_string(j, "job_id");
    for (const auto &t : read_array(j, "tasks")) s.tasks.push_back(read_task_spec(t));
    return s;
  }
  if (type == "SUBMIT_ACK") {
    return SubmitAck{read_string(j, "job_id"), read_int(j, "accepted_count")};
  }
  if (type == "JOB_STATUS") return JobStatus{read_string(j, "job_id")};
  if (type == "JOB_STATUS_REPLY") {
    JobStatusReply s;
    s.job_id = read_string(j, "job_id");
    for (const auto &t : read_array(j, "tasks")) s.tasks.push_back(read_task_status(t));
    return s;
  }
  if (type == "ERROR") return Error{read_string(j, "code"), read_string(j, "detail")};
  fail("unknown message type '" + type + "'");
}

}  // namespace

std::string_view type_name(const Message &m) {
  static constexpr std::string_view kNames[] = {
      "REGISTER", "REGISTER_ACK", "HEARTBEAT",  "HEARTBEAT_ACK",    "DISPATCH", "RESULT",
      "SUBMIT",   "SUBMIT_ACK",   "JOB_STATUS", "JOB_STATUS_REPLY", "ERROR"};
  static_assert(std::size(kNames) == std::variant_size_v<Message>);
  return kNames[m.index()];
}

std::string encode(const Message &m) {
  // nlohmann::json objects are std::map backed, so iteration (and dump of
  // nested objects) is already in key byte order. Invalid UTF-8 in strings
  // is replaced with U+FFFD rather than failing the send.
  const json fields = body(m);
  std::string out = "{\"type\":\"";
  out += type_name(m);
  out += '"';
  for (auto it = fields.begin(); it != fields.end(); ++it) {
    out += ',';
    out += json(it.key()).dump(-1, ' ', false, json::error_handler_t::replace);
    out += ':';
    out += it.value().dump(-1, ' ', false, json::error_handler_t::replace);
  }
  out += "}\n";
  return out;
}

Message decode(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error &e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail("message is not a JSON object");
  const auto type = read_string(j, "type");
  try {
    return decode_body(type, j);
  } catch (const json::exception &e) {
    fail(std::string("bad field value: ") + e.what());
  }
}

}  // namespace hetsched::wire
