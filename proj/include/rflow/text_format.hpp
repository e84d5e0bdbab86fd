// Copyright 2026 The rflow Authors
//
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

// Helpers shared by the line-oriented text formats (corpus, pairset, CSVs).

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rflow {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<std::uint64_t> parse_u64(std::string_view s);

std::vector<std::string_view> split_ws(std::string_view line);

/// Space-separated row of doubles.
void write_row(std::ostream& os, std::span<const double> values);

/// Reads lines while tracking the 1-based line number for error messages.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  /// Next line, or nullopt at end of input.
  std::optional<std::string> next();
  /// Next line; throws FormatError at end of input.
  std::string expect(std::string_view what);
  std::size_t line_number() const noexcept { return line_; }
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::istream& is_;
  std::string source_;
  std::size_t line_ = 0;
};

/// Reads `key=value` header lines up to the first line that is not one.
/// That line is returned through `first_body_line` (nullopt at end of input).
std::map<std::string, std::string> read_header(LineReader& reader,
                                               std::optional<std::string>& first_body_line);

/// Parses `expected` space-separated doubles from a line.
std::vector<double> parse_row(LineReader& reader, std::string_view line, std::size_t expected);

}  // namespace rflow
