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

// Running-key ciphers z_i = c(x_i, y_i), x_i = d(z_i, y_i).

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "runkey/error.hpp"
#include "runkey/word.hpp"

namespace runkey {

inline constexpr std::size_t kMaxCipherAlphabet = 4096;

/// Coder/decoder pair stored as n x n tables indexed [x * n + y] for the
/// coder and [z * n + y] for the decoder.
class CipherSpec {
 public:
  /// Builds a cipher from its coder table; the decoder is derived. Throws
  /// InvalidArgument unless x -> c(x, y) is a bijection for every key y.
  static CipherSpec from_coder(std::size_t n, std::vector<Symbol> coder) {
    check_size(n, coder.size());
    std::vector<Symbol> decoder(n * n, 0);
    std::vector<char> seen(n);
    for (std::size_t y = 0; y < n; ++y) {
      std::fill(seen.begin(), seen.end(), 0);
      for (std::size_t x = 0; x < n; ++x) {
        const Symbol z = coder[x * n + y];
        if (z >= n) throw SymbolRangeError("coder output out of range");
        if (seen[z]) {
          throw InvalidArgument("coder is not a bijection in x for key symbol " + std::to_string(y));
        }
        seen[z] = 1;
        decoder[z * n + y] = static_cast<Symbol>(x);
      }
    }
    return CipherSpec(n, std::move(coder), std::move(decoder));
  }

  /// Builds a cipher from both tables and checks d(c(x, y), y) = x.
  static CipherSpec from_tables(std::size_t n, std::vector<Symbol> coder, std::vector<Symbol> decoder) {
    check_size(n, coder.size());
    check_size(n, decoder.size());
    CipherSpec derived = from_coder(n, coder);
    if (derived.decoder_ != decoder) {
      throw InvalidArgument("decoder does not invert the coder: d(c(x, y), y) != x for some (x, y)");
    }
    return derived;
  }

  std::size_t alphabet_size() const { return n_; }
  Symbol encode(Symbol x, Symbol y) const { return coder_[x * n_ + y]; }
  Symbol decode(Symbol z, Symbol y) const { return decoder_[z * n_ + y]; }

  /// For every plaintext symbol x the key symbol is recoverable from (x, z),
  /// i.e. y -> c(x, y) is also a bijection. Exact posterior inference needs it.
  bool key_recoverable() const { return key_recoverable_; }

  /// The unique y with c(x, y) = z. Requires key_recoverable().
  Symbol key_for(Symbol x, Symbol z) const { return key_table_[x * n_ + z]; }

 private:
  CipherSpec(std::size_t n, std::vector<Symbol> coder, std::vector<Symbol> decoder)
      : n_(n), coder_(std::move(coder)), decoder_(std::move(decoder)) {
    key_table_.assign(n_ * n_, 0);
    std::vector<char> seen(n_ * n_, 0);
    key_recoverable_ = true;
    for (std::size_t x = 0; x < n_ && key_recoverable_; ++x) {
      for (std::size_t y = 0; y < n_; ++y) {
        const Symbol z = coder_[x * n_ + y];
        if (seen[x * n_ + z]) {
          key_recoverable_ = false;
          break;
        }
        seen[x * n_ + z] = 1;
        key_table_[x * n_ + z] = static_cast<Symbol>(y);
      }
    }
  }

  static void check_size(std::size_t n, std::size_t entries) {
    if (n < 2) throw InvalidArgument("alphabet size must be at least 2");
    if (n > kMaxCipherAlphabet) throw CapExceeded("cipher alphabet larger than 4096");
    if (entries != n * n) throw InvalidArgument("cipher table must have n*n entries");
  }

  std::size_t n_;
  std::vector<Symbol> coder_;
  std::vector<Symbol> decoder_;
  std::vector<Symbol> key_table_;  // [x * n + z] -> y
  bool key_recoverable_ = false;
};

/// c(x, y) = (x + y) mod n, d(z, y) = (z - y) mod n. For n = 2 this is XOR.
inline CipherSpec additive_cipher(std::size_t n) {
  if (n < 2) throw InvalidArgument("alphabet size must be at least 2");
  if (n > kMaxCipherAlphabet) throw CapExceeded("cipher alphabet larger than 4096");
  std::vector<Symbol> coder(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) coder[x * n + y] = static_cast<Symbol>((x + y) % n);
  }
  return CipherSpec::from_coder(n, std::move(coder));
}

namespace detail {

inline void check_pair(const CipherSpec& spec, std::span<const Symbol> a, std::span<const Symbol> key,
                       std::span<Symbol> out) {
  if (a.size() != key.size()) {
    throw LengthMismatch("text has " + std::to_string(a.size()) + " symbols but key has " +
                         std::to_string(key.size()));
  }
  if (out.size() != a.size()) throw LengthMismatch("output buffer length differs from input");
  check_word(a, spec.alphabet_size());
  check_word(key, spec.alphabet_size());
}

}  // namespace detail

inline void encrypt_into(const CipherSpec& spec, std::span<const Symbol> x, std::span<const Symbol> y,
                         std::span<Symbol> z) {
  detail::check_pair(spec, x, y, z);
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = spec.encode(x[i], y[i]);
}

inline void decrypt_into(const CipherSpec& spec, std::span<const Symbol> z, std::span<const Symbol> y,
                         std::span<Symbol> x) {
  detail::check_pair(spec, z, y, x);
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = spec.decode(z[i], y[i]);
}

inline Word encrypt(const CipherSpec& spec, std::span<const Symbol> x, std::span<const Symbol> y) {
  Word z(x.size());
  encrypt_into(spec, x, y, z);
  return z;
}

inline Word decrypt(const CipherSpec& spec, std::span<const Symbol> z, std::span<const Symbol> y) {
  Word x(z.size());
  decrypt_into(spec, z, y, x);
  return x;
}

enum class Direction { kEncrypt, kDecrypt };

/// Applies the cipher to a byte stream in fixed-size chunks, one symbol per
/// byte. The key stream must be at least as long as the input; trailing key
/// bytes are ignored. Returns the number of symbols written.
inline std::uint64_t transform_stream(const CipherSpec& spec, Direction dir, std::istream& in,
                                      std::istream& key, std::ostream& out,
                                      std::size_t chunk_size = 1 << 16) {
  std::vector<char> in_buf(chunk_size), key_buf(chunk_size), out_buf(chunk_size);
  Word text(chunk_size), key_syms(chunk_size), result(chunk_size);
  std::uint64_t total = 0;
  for (;;) {
    in.read(in_buf.data(), static_cast<std::streamsize>(chunk_size));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    key.read(key_buf.data(), static_cast<std::streamsize>(got));
    if (static_cast<std::size_t>(key.gcount()) != got) {
      throw LengthMismatch("key stream is shorter than the input (" +
                           std::to_string(total + static_cast<std::uint64_t>(key.gcount())) + " < " +
                           std::to_string(total + got) + "+ symbols)");
    }
    for (std::size_t i = 0; i < got; ++i) {
      text[i] = static_cast<unsigned char>(in_buf[i]);
      key_syms[i] = static_cast<unsigned char>(key_buf[i]);
    }
    const std::span<const Symbol> t(text.data(), got), k(key_syms.data(), got);
    const std::span<Symbol> r(result.data(), got);
    if (dir == Direction::kEncrypt) {
      encrypt_into(spec, t, k, r);
    } else {
      decrypt_into(spec, t, k, r);
    }
    for (std::size_t i = 0; i < got; ++i) out_buf[i] = static_cast<char>(result[i]);
    out.write(out_buf.data(), static_cast<std::streamsize>(got));
    total += got;
  }
  return total;
}

}  // namespace runkey
