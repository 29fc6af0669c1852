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

// Exact posteriors P(x | z) and entropy quantities of the joint process
// (X, Z) where Z = c(X, Y) with X and Y independent stationary sources.
//
// Z is a deterministic function of the product chain whose state is the pair
// (X context, Y context). Everything about Z alone (marginal likelihood,
// block entropies, entropy-rate brackets) is computed by forward recursion
// over that chain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "runkey/cipher.hpp"
#include "runkey/detail/enumerate.hpp"
#include "runkey/detail/log2_math.hpp"
#include "runkey/detail/parallel.hpp"
#include "runkey/error.hpp"
#include "runkey/sources.hpp"
#include "runkey/word.hpp"

namespace runkey {

struct ComputeOptions {
  /// Largest n^t plaintext table materialized by posterior().
  std::uint64_t posterior_cap = std::uint64_t{1} << 24;
  /// Largest number of blocks enumerated for block entropies.
  std::uint64_t block_cap = kDefaultBlockCap;
  /// Largest product state space (X contexts times Y contexts).
  std::uint64_t state_cap = std::uint64_t{1} << 16;
  unsigned workers = 1;
};

namespace detail {

inline void check_compatible(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec) {
  if (xm.alphabet_size() != spec.alphabet_size() || ym.alphabet_size() != spec.alphabet_size()) {
    throw InvalidArgument("plaintext model, key model and cipher must share one alphabet (got n=" +
                          std::to_string(xm.alphabet_size()) + ", " + std::to_string(ym.alphabet_size()) +
                          ", " + std::to_string(spec.alphabet_size()) + ")");
  }
  if (!spec.key_recoverable()) {
    throw InvalidArgument("cipher does not determine the key symbol from (plaintext, ciphertext)");
  }
}

inline void check_cap(std::size_t n, std::size_t len, std::uint64_t cap, const char* what) {
  if (saturating_pow(n, len) > cap) {
    throw CapExceeded(std::string(what) + ": " + std::to_string(n) + "^" + std::to_string(len) +
                      " exceeds the enumeration cap of " + std::to_string(cap));
  }
}

/// Product chain over (X context, Y context) with the ciphertext symbol as a
/// deterministic emission. State index is cx * (number of Y contexts) + cy.
class CiphertextChain {
 public:
  struct Edge {
    std::uint32_t target;
    double weight;
  };

  CiphertextChain(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                  std::uint64_t state_cap)
      : n_(spec.alphabet_size()) {
    check_compatible(xm, ym, spec);
    const std::uint64_t nx = xm.num_states(), ny = ym.num_states();
    if (nx * ny > state_cap) {
      throw CapExceeded("product state space of " + std::to_string(nx * ny) + " states exceeds the cap of " +
                        std::to_string(state_cap));
    }
    num_states_ = static_cast<std::size_t>(nx * ny);
    if (static_cast<std::uint64_t>(n_) * n_ * num_states_ > (std::uint64_t{1} << 24)) {
      throw CapExceeded("product chain transition table exceeds 2^24 entries");
    }
    stationary_.resize(num_states_);
    for (std::size_t cx = 0; cx < nx; ++cx) {
      for (std::size_t cy = 0; cy < ny; ++cy) {
        stationary_[cx * ny + cy] = xm.stationary()[cx] * ym.stationary()[cy];
      }
    }
    edges_.resize(n_ * num_states_ * n_);
    mass_.assign(n_ * num_states_, 0.0);
    for (std::size_t z = 0; z < n_; ++z) {
      for (std::size_t cx = 0; cx < nx; ++cx) {
        for (std::size_t cy = 0; cy < ny; ++cy) {
          const std::size_t s = cx * ny + cy;
          double total = 0.0;
          for (std::size_t x = 0; x < n_; ++x) {
            const Symbol y = spec.key_for(static_cast<Symbol>(x), static_cast<Symbol>(z));
            const double w = xm.transition(cx, static_cast<Symbol>(x)) * ym.transition(cy, y);
            const std::size_t target = xm.advance_state(cx, static_cast<Symbol>(x)) * ny + ym.advance_state(cy, y);
            edges_[(z * num_states_ + s) * n_ + x] = {static_cast<std::uint32_t>(target), w};
            total += w;
          }
          mass_[z * num_states_ + s] = total;
        }
      }
    }
  }

  std::size_t alphabet_size() const { return n_; }
  std::size_t num_states() const { return num_states_; }
  std::span<const double> stationary() const { return stationary_; }

  /// next(s') = sum_s alpha(s) P(z, s' | s).
  void step(Symbol z, std::span<const double> alpha, std::span<double> next) const {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < num_states_; ++s) {
      const double a = alpha[s];
      if (a == 0.0) continue;
      const Edge* e = &edges_[(z * num_states_ + s) * n_];
      for (std::size_t x = 0; x < n_; ++x) next[e[x].target] += a * e[x].weight;
    }
  }

  /// sum_s alpha(s) P(z | s).
  double step_mass(Symbol z, std::span<const double> alpha) const {
    const double* m = &mass_[z * num_states_];
    double total = 0.0;
    for (std::size_t s = 0; s < num_states_; ++s) total += alpha[s] * m[s];
    return total;
  }

 private:
  std::size_t n_;
  std::size_t num_states_ = 0;
  std::vector<double> stationary_;
  std::vector<Edge> edges_;   // [(z * S + s) * n + x]
  std::vector<double> mass_;  // [z * S + s]
};

inline void z_entropy_dfs(const CiphertextChain& chain, std::size_t depth, std::size_t max_len,
                          std::span<const double> alpha, std::vector<std::vector<double>>& buffers,
                          std::vector<double>& h) {
  const std::size_t n = chain.alphabet_size();
  for (std::size_t z = 0; z < n; ++z) {
    if (depth + 1 == max_len) {
      h[max_len] += entropy_term(chain.step_mass(static_cast<Symbol>(z), alpha));
      continue;
    }
    std::vector<double>& next = buffers[depth + 1];
    chain.step(static_cast<Symbol>(z), alpha, next);
    double p = 0.0;
    for (double v : next) p += v;
    if (p <= 0.0) continue;
    h[depth + 1] += entropy_term(p);
    z_entropy_dfs(chain, depth + 1, max_len, next, buffers, h);
  }
}

/// H(Z_1..Z_L) for L = 0..max_len (entry 0 is 0) with the chain started from
/// each distribution in `starts`, one chunked task per (start, prefix).
inline std::vector<std::vector<double>> z_joint_entropies(const CiphertextChain& chain,
                                                          const std::vector<std::vector<double>>& starts,
                                                          std::size_t max_len, unsigned workers) {
  const std::size_t n = chain.alphabet_size();
  const std::size_t p = chunk_depth(n, max_len);
  const std::uint64_t chunks = saturating_pow(n, p);
  const auto partial = map_indexed<std::vector<double>>(
      starts.size() * chunks, workers, [&](std::size_t task) {
        const std::size_t start = task / chunks;
        const std::uint64_t c = task % chunks;
        std::vector<double> h(max_len + 1, 0.0);
        std::vector<std::vector<double>> buffers(max_len + 1, std::vector<double>(chain.num_states()));
        buffers[0] = starts[start];
        const Word prefix = word_from_index(c, n, p);
        for (std::size_t d = 0; d < p; ++d) {
          chain.step(prefix[d], buffers[d], buffers[d + 1]);
          double mass = 0.0;
          for (double v : buffers[d + 1]) mass += v;
          if (mass <= 0.0) return h;
          // A depth-(d+1) node is shared by n^(p-d-1) chunks; only the first counts it.
          if (c % saturating_pow(n, p - d - 1) == 0) h[d + 1] += entropy_term(mass);
        }
        if (p < max_len) z_entropy_dfs(chain, p, max_len, buffers[p], buffers, h);
        return h;
      });
  std::vector<std::vector<double>> out(starts.size(), std::vector<double>(max_len + 1, 0.0));
  for (std::size_t task = 0; task < partial.size(); ++task) {
    auto& acc = out[task / chunks];
    for (std::size_t l = 0; l <= max_len; ++l) acc[l] += partial[task][l];
  }
  return out;
}

inline double forward_log_marginal(const CiphertextChain& chain, std::span<const Symbol> z,
                                   std::vector<double>& alpha, std::vector<double>& next) {
  alpha.assign(chain.stationary().begin(), chain.stationary().end());
  next.resize(alpha.size());
  double log_p = 0.0;
  for (Symbol s : z) {
    chain.step(s, alpha, next);
    double scale = 0.0;
    for (double v : next) scale += v;
    if (scale <= 0.0) return kNegInf;
    log_p += std::log2(scale);
    for (std::size_t i = 0; i < next.size(); ++i) alpha[i] = next[i] / scale;
  }
  return log_p;
}

}  // namespace detail

/// Exact posterior over all n^t plaintexts for one ciphertext.
struct PosteriorTable {
  Word ciphertext;
  std::size_t alphabet_size = 0;
  /// log2 P(x | z), indexed by the base-n value of x (first symbol most significant).
  std::vector<double> log_posterior;
  /// log2 P(z).
  double log_marginal = 0.0;

  std::size_t length() const { return ciphertext.size(); }
  std::uint64_t size() const { return log_posterior.size(); }
  double probability(std::uint64_t index) const { return std::exp2(log_posterior[index]); }
  Word plaintext(std::uint64_t index) const { return word_from_index(index, alphabet_size, length()); }
  double log_posterior_of(std::span<const Symbol> x) const {
    if (x.size() != length()) throw LengthMismatch("plaintext length differs from ciphertext length");
    check_word(x, alphabet_size);
    return log_posterior[word_index(x, alphabet_size)];
  }
};

inline PosteriorTable posterior(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                std::span<const Symbol> z, const ComputeOptions& opts = {}) {
  detail::check_compatible(xm, ym, spec);
  const std::size_t n = spec.alphabet_size();
  if (z.empty()) throw InvalidArgument("ciphertext must be non-empty");
  check_word(z, n);
  detail::check_cap(n, z.size(), opts.posterior_cap, "posterior table");

  PosteriorTable table;
  table.ciphertext.assign(z.begin(), z.end());
  table.alphabet_size = n;
  table.log_posterior.assign(static_cast<std::size_t>(saturating_pow(n, z.size())), detail::kNegInf);

  struct Node {
    SourceModel::Cursor cx, cy;
    double log_joint = 0.0;
  };
  struct Max {
    double v = detail::kNegInf;
  };
  auto step = [&](const Node& parent, std::size_t depth, Symbol x, Node& child) {
    const Symbol y = spec.key_for(x, z[depth]);
    const double lx = xm.log_conditional(parent.cx, x);
    if (lx == detail::kNegInf) return false;
    const double ly = ym.log_conditional(parent.cy, y);
    if (ly == detail::kNegInf) return false;
    child.cx = xm.advance(parent.cx, x);
    child.cy = ym.advance(parent.cy, y);
    child.log_joint = parent.log_joint + lx + ly;
    return true;
  };
  auto& out = table.log_posterior;
  auto leaf = [&out](const Node& node, std::uint64_t index, Max& acc) {
    out[index] = node.log_joint;
    acc.v = std::max(acc.v, node.log_joint);
  };
  const auto maxima = detail::enumerate_words<Max>(n, z.size(), Node{}, step, leaf, opts.workers);
  double hi = detail::kNegInf;
  for (const Max& m : maxima) hi = std::max(hi, m.v);
  if (hi == detail::kNegInf) throw NumericError("ciphertext has probability zero under the given models");

  constexpr std::size_t kSumChunk = std::size_t{1} << 16;
  const std::size_t sum_chunks = (out.size() + kSumChunk - 1) / kSumChunk;
  const auto sums = detail::map_indexed<double>(sum_chunks, opts.workers, [&](std::size_t c) {
    double acc = 0.0;
    const std::size_t end = std::min(out.size(), (c + 1) * kSumChunk);
    for (std::size_t i = c * kSumChunk; i < end; ++i) acc += std::exp2(out[i] - hi);
    return acc;
  });
  double total = 0.0;
  for (double s : sums) total += s;
  table.log_marginal = hi + std::log2(total);
  for (double& v : out) {
    if (v != detail::kNegInf) v -= table.log_marginal;
  }
  return table;
}

/// log2 P(z) by scaled forward recursion over the product chain; linear in |z|.
inline double log_marginal_forward(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                   std::span<const Symbol> z, const ComputeOptions& opts = {}) {
  const detail::CiphertextChain chain(xm, ym, spec, opts.state_cap);
  check_word(z, spec.alphabet_size());
  std::vector<double> alpha, next;
  return detail::forward_log_marginal(chain, z, alpha, next);
}

/// Joint block entropy h_m(X, Z) = H((X, Z)_1..m+1) / (m+1), enumerated
/// directly over (x, z) block pairs.
inline double hm_joint(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec, std::size_t m,
                       const ComputeOptions& opts = {}) {
  detail::check_compatible(xm, ym, spec);
  const std::size_t n = spec.alphabet_size();
  const std::size_t len = m + 1;
  detail::check_cap(n, 2 * len, opts.block_cap, "joint (x, z) blocks");
  // Even depths choose x_i, odd depths choose z_i.
  struct Node {
    SourceModel::Cursor cx, cy;
    double p = 1.0;
    Symbol x = 0;
  };
  auto step = [&](const Node& parent, std::size_t depth, Symbol s, Node& child) {
    child = parent;
    if (depth % 2 == 0) {
      child.x = s;
      child.p = parent.p * xm.conditional(parent.cx, s);
      if (child.p <= 0.0) return false;
      child.cx = xm.advance(parent.cx, s);
      return true;
    }
    const Symbol y = spec.key_for(parent.x, s);
    child.p = parent.p * ym.conditional(parent.cy, y);
    if (child.p <= 0.0) return false;
    child.cy = ym.advance(parent.cy, y);
    return true;
  };
  auto leaf = [](const Node& node, std::uint64_t, double& acc) { acc += detail::entropy_term(node.p); };
  const auto partial = detail::enumerate_words<double>(n, 2 * len, Node{}, step, leaf, opts.workers);
  double h = 0.0;
  for (double v : partial) h += v;
  return h / static_cast<double>(len);
}

/// h_m(Z) = H(Z_1..Z_{m+1}) / (m+1).
inline double hm_ciphertext(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec, std::size_t m,
                            const ComputeOptions& opts = {}) {
  detail::check_cap(spec.alphabet_size(), m + 1, opts.block_cap, "ciphertext blocks");
  const detail::CiphertextChain chain(xm, ym, spec, opts.state_cap);
  const std::vector<std::vector<double>> start{{chain.stationary().begin(), chain.stationary().end()}};
  const auto h = detail::z_joint_entropies(chain, start, m + 1, opts.workers);
  return h[0][m + 1] / static_cast<double>(m + 1);
}

/// h_m(X | Z) = h_m(X) + h_m(Y) - h_m(Z), using h_m(X, Z) = h_m(X) + h_m(Y)
/// ((x, z) <-> (x, y) is a bijection and X, Y are independent).
inline double hm_conditional(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                             std::size_t m, const ComputeOptions& opts = {}) {
  detail::check_compatible(xm, ym, spec);
  const double hx = block_entropy_hm(xm, m, opts.block_cap, opts.workers);
  const double hy = block_entropy_hm(ym, m, opts.block_cap, opts.workers);
  return hx + hy - hm_ciphertext(xm, ym, spec, m, opts);
}

struct EntropyBracket {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t order_used = 0;

  double midpoint() const { return 0.5 * (lower + upper); }
  double width() const { return upper - lower; }
};

/// Bracket on the entropy rate h(Z):
///   upper = H(Z_{m+1} | Z_1..Z_m),
///   lower = H(Z_{m+1} | Z_1..Z_m, S_0),
/// where S_0 is the product chain state just before Z_1. The upper end is
/// non-increasing and the lower end non-decreasing in m.
inline EntropyBracket hZ_bracket(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                 std::size_t m, const ComputeOptions& opts = {}) {
  const std::size_t n = spec.alphabet_size();
  detail::check_cap(n, m + 1, opts.block_cap, "ciphertext blocks");
  const detail::CiphertextChain chain(xm, ym, spec, opts.state_cap);
  const auto pi = chain.stationary();

  std::vector<std::vector<double>> starts{{pi.begin(), pi.end()}};
  std::vector<double> weights;
  for (std::size_t s = 0; s < pi.size(); ++s) {
    if (pi[s] <= 0.0) continue;
    std::vector<double> one_hot(pi.size(), 0.0);
    one_hot[s] = 1.0;
    starts.push_back(std::move(one_hot));
    weights.push_back(pi[s]);
  }
  const auto h = detail::z_joint_entropies(chain, starts, m + 1, opts.workers);
  double cond_next = 0.0, cond_prev = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cond_next += weights[i] * h[i + 1][m + 1];
    cond_prev += weights[i] * h[i + 1][m];
  }
  const double log_n = std::log2(static_cast<double>(n));
  EntropyBracket b;
  b.order_used = m;
  b.upper = detail::clamp_unit(h[0][m + 1] - h[0][m], log_n);
  b.lower = detail::clamp_unit(cond_next - cond_prev, log_n);
  if (b.lower > b.upper) {
    if (b.lower - b.upper > 1e-9) throw NumericError("entropy bracket inverted beyond rounding");
    b.lower = b.upper;
  }
  return b;
}

/// Bracket on h(X | Z) = h(X) + h(Y) - h(Z), from the exact entropy rates of
/// X and Y and the h(Z) bracket; ends clamped to [0, log n].
inline EntropyBracket hXZ_bracket(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                  std::size_t m, const ComputeOptions& opts = {}) {
  const EntropyBracket z = hZ_bracket(xm, ym, spec, m, opts);
  const double base = entropy_rate(xm) + entropy_rate(ym);
  const double log_n = std::log2(static_cast<double>(spec.alphabet_size()));
  EntropyBracket b;
  b.order_used = m;
  b.lower = detail::clamp_unit(base - z.upper, log_n);
  b.upper = detail::clamp_unit(base - z.lower, log_n);
  return b;
}

}  // namespace runkey
