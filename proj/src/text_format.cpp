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

#include "rflow/text_format.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "rflow/error.hpp"

namespace rflow {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

void write_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ' ';
    os << format_double(values[i]);
  }
  os << '\n';
}

std::optional<std::string> LineReader::next() {
  std::string line;
  if (!std::getline(is_, line)) return std::nullopt;
  ++line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string LineReader::expect(std::string_view what) {
  auto line = next();
  if (!line) fail("unexpected end of file, expected " + std::string(what));
  return *line;
}

void LineReader::fail(const std::string& message) const {
  throw FormatError(source_ + ":" + std::to_string(line_) + ": " + message);
}

std::map<std::string, std::string> read_header(LineReader& reader,
                                               std::optional<std::string>& first_body_line) {
  std::map<std::string, std::string> header;
  while (auto line = reader.next()) {
    const auto eq = line->find('=');
    if (eq == std::string::npos || line->find(' ') < eq) {
      first_body_line = std::move(line);
      return header;
    }
    auto key = line->substr(0, eq);
    if (header.count(key)) reader.fail("duplicate header key '" + key + "'");
    header.emplace(std::move(key), line->substr(eq + 1));
  }
  first_body_line.reset();
  return header;
}

std::vector<double> parse_row(LineReader& reader, std::string_view line, std::size_t expected) {
  const auto fields = split_ws(line);
  if (fields.size() != expected) {
    reader.fail("expected " + std::to_string(expected) + " values, found " +
                std::to_string(fields.size()));
  }
  std::vector<double> row;
  row.reserve(expected);
  for (auto f : fields) {
    auto v = parse_double(f);
    if (!v) reader.fail("bad number '" + std::string(f) + "'");
    row.push_back(*v);
  }
  return row;
}

}  // namespace rflow
