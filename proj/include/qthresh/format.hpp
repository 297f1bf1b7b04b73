// Copyright 2026 The qthresh Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QTHRESH_FORMAT_HPP_
#define QTHRESH_FORMAT_HPP_

#include <charconv>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

#include "qthresh/errors.hpp"

namespace qthresh {

// Shortest round-trip decimal form. Locale independent, '.' separator.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InputError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// Writes comma-separated fields followed by a newline.
class CsvRow {
 public:
  explicit CsvRow(std::ostream& out) : out_(out) {}
  ~CsvRow() { out_ << '\n'; }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(double v) { return field(format_double(v)); }
  CsvRow& operator<<(int v) { return field(std::to_string(v)); }
  CsvRow& operator<<(long v) { return field(std::to_string(v)); }
  CsvRow& operator<<(long long v) { return field(std::to_string(v)); }
  CsvRow& operator<<(unsigned long v) { return field(std::to_string(v)); }
  CsvRow& operator<<(unsigned long long v) { return field(std::to_string(v)); }
  CsvRow& operator<<(std::string_view v) { return field(v); }
  CsvRow& operator<<(const char* v) { return field(v); }

 private:
  CsvRow& field(std::string_view v) {
    if (!first_) out_ << ',';
    out_ << v;
    first_ = false;
    return *this;
  }

  std::ostream& out_;
  bool first_ = true;
};

}  // namespace qthresh

#endif  // QTHRESH_FORMAT_HPP_
