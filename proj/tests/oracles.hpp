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

// Brute-force reference computations for the tests. These work from the raw
// transition table and stationary vector by definition and never go through
// the library's cursors, product chain or enumeration helpers.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "runkey/cipher.hpp"
#include "runkey/sources.hpp"

namespace runkey::oracle {

inline double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0) h -= p * std::log2(p);
  if (p < 1) h -= (1 - p) * std::log2(1 - p);
  return h;
}

inline Word digits(std::uint64_t idx, std::size_t n, std::size_t len) {
  Word w(len);
  for (std::size_t i = len; i-- > 0;) {
    w[i] = static_cast<Symbol>(idx % n);
    idx /= n;
  }
  return w;
}

inline std::uint64_t power(std::size_t n, std::size_t e) {
  std::uint64_t r = 1;
  while (e--) r *= n;
  return r;
}

/// P(u) straight from the definition: for |u| >= k, pi(first k) times the
/// transitions; for |u| < k, the sum of pi over all states starting with u.
inline double block_prob(const SourceModel& m, const Word& u) {
  const std::size_t n = m.alphabet_size(), k = m.order();
  const auto table = m.table();
  const auto pi = m.stationary();
  if (u.size() < k) {
    const std::uint64_t ext = power(n, k - u.size());
    double total = 0.0;
    for (std::uint64_t e = 0; e < ext; ++e) {
      Word full = u;
      const Word tail = digits(e, n, k - u.size());
      full.insert(full.end(), tail.begin(), tail.end());
      std::uint64_t s = 0;
      for (Symbol a : full) s = s * n + a;
      total += pi[s];
    }
    return total;
  }
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k; ++i) s = s * n + u[i];
  double p = pi[s];
  const std::uint64_t states = power(n, k);
  for (std::size_t i = k; i < u.size(); ++i) {
    p *= table[s * n + u[i]];
    s = (s * n + u[i]) % states;
  }
  return p;
}

/// H(X_1..X_len) by listing every word.
inline double block_entropy(const SourceModel& m, std::size_t len) {
  double h = 0.0;
  for (std::uint64_t i = 0; i < power(m.alphabet_size(), len); ++i) {
    const double p = block_prob(m, digits(i, m.alphabet_size(), len));
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

/// The key word y with c(x_i, y_i) = z_i, found by scanning the coder.
inline Word key_by_search(const CipherSpec& spec, const Word& x, const Word& z) {
  Word y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (Symbol c = 0; c < spec.alphabet_size(); ++c) {
      if (spec.encode(x[i], c) == z[i]) {
        y[i] = c;
        break;
      }
    }
  }
  return y;
}

/// P(x, z) for every plaintext x, index order.
inline std::vector<double> joint_probs(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                       const Word& z) {
  const std::size_t n = spec.alphabet_size();
  std::vector<double> out(power(n, z.size()));
  for (std::uint64_t i = 0; i < out.size(); ++i) {
    const Word x = digits(i, n, z.size());
    out[i] = block_prob(xm, x) * block_prob(ym, key_by_search(spec, x, z));
  }
  return out;
}

inline double marginal(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec, const Word& z) {
  double total = 0.0;
  for (double p : joint_probs(xm, ym, spec, z)) total += p;
  return total;
}

/// H(Z_1..Z_len) by listing every ciphertext block and summing its marginal.
inline double ciphertext_block_entropy(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                       std::size_t len) {
  double h = 0.0;
  for (std::uint64_t i = 0; i < power(spec.alphabet_size(), len); ++i) {
    const double p = marginal(xm, ym, spec, digits(i, spec.alphabet_size(), len));
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

/// Random strictly positive (hence ergodic) model.
inline SourceModel random_model(std::mt19937_64& rng, std::size_t n, std::size_t k, double floor = 0.02) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  const std::uint64_t states = power(n, k);
  std::vector<double> table(states * n);
  for (std::uint64_t s = 0; s < states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) sum += table[s * n + a] = u(rng);
    for (std::size_t a = 0; a < n; ++a) table[s * n + a] /= sum;
    // Force the row to sum to 1 to the last bit.
    double partial = 0.0;
    for (std::size_t a = 0; a + 1 < n; ++a) partial += table[s * n + a];
    table[s * n + n - 1] = 1.0 - partial;
  }
  return SourceModel(n, k, std::move(table));
}

inline Word random_word(std::mt19937_64& rng, std::size_t n, std::size_t len) {
  std::uniform_int_distribution<Symbol> d(0, static_cast<Symbol>(n - 1));
  Word w(len);
  for (auto& s : w) s = d(rng);
  return w;
}

}  // namespace runkey::oracle
