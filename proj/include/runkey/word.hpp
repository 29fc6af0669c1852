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

#include <cctype>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "runkey/error.hpp"

namespace runkey {

using Symbol = std::uint32_t;

/// A word over A = {0, ..., n-1}. The alphabet size travels separately.
using Word = std::vector<Symbol>;

/// Throws SymbolRangeError if any symbol is >= n.
inline void check_word(std::span<const Symbol> w, std::size_t n) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] >= n) {
      throw SymbolRangeError("symbol " + std::to_string(w[i]) + " at position " +
                             std::to_string(i) + " is outside alphabet of size " +
                             std::to_string(n));
    }
  }
}

/// n^e, or max() when it would not fit in 64 bits.
inline std::uint64_t saturating_pow(std::uint64_t n, std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (n != 0 && r > std::numeric_limits<std::uint64_t>::max() / n) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r *= n;
  }
  return r;
}

/// Base-n index of a word, first symbol most significant.
inline std::uint64_t word_index(std::span<const Symbol> w, std::size_t n) {
  std::uint64_t idx = 0;
  for (Symbol s : w) idx = idx * n + s;
  return idx;
}

inline Word word_from_index(std::uint64_t idx, std::size_t n, std::size_t len) {
  Word w(len);
  for (std::size_t i = len; i-- > 0;) {
    w[i] = static_cast<Symbol>(idx % n);
    idx /= n;
  }
  return w;
}

// Symbol text: for n <= 36 one character per symbol (0-9 then a-z), anything
// else is whitespace-separated decimal integers.
inline constexpr std::size_t kMaxCharAlphabet = 36;

inline std::string format_word(std::span<const Symbol> w, std::size_t n) {
  std::string out;
  if (n <= kMaxCharAlphabet) {
    out.reserve(w.size());
    for (Symbol s : w) {
      out.push_back(static_cast<char>(s < 10 ? '0' + s : 'a' + (s - 10)));
    }
    return out;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(w[i]);
  }
  return out;
}

inline Word parse_word(std::string_view text, std::size_t n) {
  Word w;
  if (n <= kMaxCharAlphabet) {
    for (char c : text) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      const int lc = std::tolower(static_cast<unsigned char>(c));
      Symbol s;
      if (lc >= '0' && lc <= '9') {
        s = static_cast<Symbol>(lc - '0');
      } else if (lc >= 'a' && lc <= 'z') {
        s = static_cast<Symbol>(lc - 'a' + 10);
      } else {
        throw FormatError(std::string("unexpected character '") + c + "' in symbol text");
      }
      w.push_back(s);
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      if (std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
        continue;
      }
      std::uint64_t v = 0;
      std::size_t digits = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        v = v * 10 + static_cast<std::uint64_t>(text[i] - '0');
        if (v > std::numeric_limits<Symbol>::max()) throw FormatError("symbol value too large");
        ++i;
        ++digits;
      }
      if (digits == 0) throw FormatError("expected a decimal symbol in symbol text");
      w.push_back(static_cast<Symbol>(v));
    }
  }
  check_word(w, n);
  return w;
}

}  // namespace runkey
