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

#include "hetsched/protocol.h"

namespace hetsched::wire {

void FrameReader::feed(std::string_view chunk) {
  const std::size_t base = buffer_.size();
  buffer_.append(chunk);
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    if (chunk[i] != '\n') continue;
    const std::size_t end = base + i;
    if (end - line_start_ > max_line_) {
      throw ProtocolError(std::string(kProtocolErrorCode), "line exceeds size cap");
    }
    line_ends_.push_back(end);
    line_start_ = end + 1;
  }
  if (buffer_.size() - line_start_ > max_line_) {
    throw ProtocolError(std::string(kProtocolErrorCode), "line exceeds size cap");
  }
}

std::optional<std::string> FrameReader::next() {
  if (line_ends_.empty()) return std::nullopt;
  const std::size_t end = line_ends_.front();
  line_ends_.pop_front();
  std::string line = buffer_.substr(consumed_, end - consumed_);
  consumed_ = end + 1;

  if (consumed_ >= 4096 && consumed_ * 2 >= buffer_.size()) {
    buffer_.erase(0, consumed_);
    for (auto &e : line_ends_) e -= consumed_;
    line_start_ -= consumed_;
    consumed_ = 0;
  }
  return line;
}

}  // namespace hetsched::wire
