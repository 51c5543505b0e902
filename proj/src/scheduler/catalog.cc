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

#include <algorithm>
#include <set>

#include "hetsched/scheduler.h"

namespace hetsched {

bool MembershipCatalog::ranks_before(const WorkerId &a, const WorkerId &b) const {
  const auto &pa = workers_.at(a);
  const auto &pb = workers_.at(b);
  if (pa.cpu_mhz != pb.cpu_mhz) return pa.cpu_mhz > pb.cpu_mhz;
  return a < b;
}

void MembershipCatalog::insert(WorkerProfile profile) {
  const WorkerId id = profile.worker_id;
  if (contains(id)) erase(id);
  const Ring which = profile.has_gpu ? Ring::kGpu : Ring::kCpu;
  workers_.emplace(id, std::move(profile));

  auto &ring = ring_ref(which);
  auto &cursor = cursor_ref(which);
  auto pos = std::find_if(ring.begin(), ring.end(), [&](const WorkerId &other) {
    return ranks_before(id, other);
  });
  const auto index = static_cast<std::size_t>(pos - ring.begin());
  const bool was_empty = ring.empty();
  ring.insert(pos, id);
  if (was_empty) {
    cursor = 0;
  } else if (index <= cursor) {
    ++cursor;
  }
}

std::optional<WorkerProfile> MembershipCatalog::erase(const WorkerId &id) {
  auto it = workers_.find(id);
  if (it == workers_.end()) return std::nullopt;
  WorkerProfile profile = std::move(it->second);
  workers_.erase(it);

  const Ring which = profile.has_gpu ? Ring::kGpu : Ring::kCpu;
  auto &ring = ring_ref(which);
  auto &cursor = cursor_ref(which);
  auto pos = std::find(ring.begin(), ring.end(), id);
  const auto index = static_cast<std::size_t>(pos - ring.begin());
  ring.erase(pos);
  if (index < cursor) --cursor;
  if (cursor >= ring.size()) cursor = 0;
  return profile;
}

WorkerProfile *MembershipCatalog::find(const WorkerId &id) {
  auto it = workers_.find(id);
  return it == workers_.end() ? nullptr : &it->second;
}

const WorkerProfile *MembershipCatalog::find(const WorkerId &id) const {
  auto it = workers_.find(id);
  return it == workers_.end() ? nullptr : &it->second;
}

std::optional<WorkerId> MembershipCatalog::next_idle(Ring which) {
  const auto &ring = ring_ref(which);
  auto &cursor = cursor_ref(which);
  const std::size_t k = ring.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pos = (cursor + i) % k;
    if (!workers_.at(ring[pos]).busy) {
      cursor = (pos + 1) % k;
      return ring[pos];
    }
  }
  return std::nullopt;
}

bool MembershipCatalog::consistent() const {
  std::set<WorkerId> seen;
  for (Ring which : {Ring::kGpu, Ring::kCpu}) {
    const auto &r = ring(which);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto *profile = find(r[i]);
      if (profile == nullptr) return false;
      if (profile->has_gpu != (which == Ring::kGpu)) return false;
      if (!seen.insert(r[i]).second) return false;
      if (i > 0 && !ranks_before(r[i - 1], r[i])) return false;
    }
    const std::size_t c = cursor(which);
    if (r.empty() ? c != 0 : c >= r.size()) return false;
  }
  return seen.size() == workers_.size();
}

}  // namespace hetsched
