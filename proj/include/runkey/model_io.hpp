// Copyright 2026 The runkey Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Model files are key-value text:
//
//   # comment
//   alphabet_size = 2
//   order = 1
//   row = 0.9 0.1        (one line per state, states in base-n order)
//   row = 0.2 0.8
//   stationary = ...     (optional; checked, never trusted blindly)
//
// Inline specifications accepted wherever a model path is:
//   uniform:N   bernoulli:p0,p1,...   markov:p00,p01;p10,p11   (order from row count)

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "runkey/error.hpp"
#include "runkey/sources.hpp"

namespace runkey {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s) {
  s = trim(s);
  // from_chars for double is not available on every toolchain we build with.
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw FormatError("not a number: '" + buf + "'");
  }
  return v;
}

inline std::size_t parse_size(std::string_view s) {
  s = trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("not a non-negative integer: '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<double> parse_numbers(std::string_view s, char sep) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = sep == ' ' ? s.find_first_of(" \t", pos) : s.find(sep, pos);
    if (next == std::string_view::npos) next = s.size();
    const std::string_view tok = trim(s.substr(pos, next - pos));
    if (!tok.empty()) out.push_back(parse_double(tok));
    pos = next + 1;
  }
  return out;
}

inline std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string to_model_text(const SourceModel& model) {
  std::ostringstream os;
  const std::size_t n = model.alphabet_size();
  os << "# runkey source model\n";
  os << "alphabet_size = " << n << "\n";
  os << "order = " << model.order() << "\n";
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    os << "row =";
    for (double p : model.row(s)) os << ' ' << detail::format_exact(p);
    os << "\n";
  }
  return os.str();
}

inline SourceModel parse_model_text(std::string_view text) {
  std::optional<std::size_t> n, k;
  std::vector<double> table;
  std::size_t rows = 0;
  std::optional<std::vector<double>> stationary;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("model line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key == "alphabet_size") {
      n = detail::parse_size(value);
    } else if (key == "order") {
      k = detail::parse_size(value);
    } else if (key == "row") {
      const auto r = detail::parse_numbers(value, ' ');
      if (n && r.size() != *n) {
        throw FormatError("model line " + std::to_string(line_no) + ": row has " + std::to_string(r.size()) +
                          " entries, expected " + std::to_string(*n));
      }
      table.insert(table.end(), r.begin(), r.end());
      ++rows;
    } else if (key == "stationary") {
      stationary = detail::parse_numbers(value, ' ');
    } else {
      throw FormatError("model line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (!n || !k) throw FormatError("model text must set alphabet_size and order");
  const std::uint64_t expected = saturating_pow(*n, *k);
  if (rows != expected) {
    throw FormatError("model has " + std::to_string(rows) + " rows, expected n^order = " + std::to_string(expected));
  }
  return SourceModel(*n, *k, std::move(table), std::move(stationary));
}

inline SourceModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_text(ss.str());
}

inline void save_model(const std::string& path, const SourceModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write model file '" + path + "'");
  out << to_model_text(model);
}

/// Inline specification or model file path.
inline SourceModel parse_model_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view kind = colon == std::string_view::npos ? std::string_view{} : spec.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (kind == "uniform") return make_uniform(detail::parse_size(args));
  if (kind == "bernoulli") return make_bernoulli(detail::parse_numbers(args, ','));
  if (kind == "markov") {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (pos <= args.size()) {
      std::size_t next = args.find(';', pos);
      if (next == std::string_view::npos) next = args.size();
      rows.push_back(detail::parse_numbers(args.substr(pos, next - pos), ','));
      pos = next + 1;
    }
    const std::size_t n = rows.front().size();
    std::size_t k = 0;
    std::uint64_t states = 1;
    while (states < rows.size()) {
      states *= n;
      ++k;
    }
    if (n < 2 || states != rows.size()) {
      throw FormatError("markov spec needs n^k rows of n probabilities each");
    }
    std::vector<double> table;
    for (const auto& r : rows) {
      if (r.size() != n) throw FormatError("markov spec rows must all have n entries");
      table.insert(table.end(), r.begin(), r.end());
    }
    return make_markov(n, k, std::move(table));
  }
  return load_model(std::string(spec));
}

}  // namespace runkey
