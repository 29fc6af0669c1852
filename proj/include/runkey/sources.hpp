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

// Finite-alphabet stationary ergodic sources: i.i.d. (order 0) and order-k
// Markov chains with an explicit state table. A state is the word of the last
// k symbols, indexed base n with the oldest symbol most significant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "runkey/detail/enumerate.hpp"
#include "runkey/detail/log2_math.hpp"
#include "runkey/error.hpp"
#include "runkey/word.hpp"

namespace runkey {

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kStationaryResidual = 1e-12;
inline constexpr double kStationaryCheckTolerance = 1e-10;
inline constexpr std::uint64_t kStationaryIterationCap = 1'000'000;
inline constexpr std::uint64_t kMaxModelEntries = std::uint64_t{1} << 24;
inline constexpr std::uint64_t kDefaultBlockCap = std::uint64_t{1} << 26;
inline constexpr double kDefaultSmoothing = 0.5;

namespace detail {

inline std::size_t shift_state(std::size_t state, std::size_t symbol, std::size_t n,
                               std::size_t num_states) {
  return num_states == 1 ? 0 : (state * n + symbol) % num_states;
}

inline std::size_t checked_state_count(std::size_t n, std::size_t k) {
  if (n < 2) throw InvalidArgument("alphabet size must be at least 2");
  if (saturating_pow(n, k + 1) > kMaxModelEntries) {
    throw CapExceeded("model with n=" + std::to_string(n) + ", order " + std::to_string(k) +
                      " exceeds the transition table cap of 2^24 entries");
  }
  return static_cast<std::size_t>(saturating_pow(n, k));
}

inline void check_rows(std::span<const double> table, std::size_t n, std::size_t num_states) {
  if (table.size() != num_states * n) {
    throw InvalidDistribution("transition table has " + std::to_string(table.size()) +
                              " entries, expected " + std::to_string(num_states * n));
  }
  for (std::size_t s = 0; s < num_states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double p = table[s * n + a];
      if (!std::isfinite(p) || p < 0.0) {
        throw InvalidDistribution("row " + std::to_string(s) + " has a negative or non-finite entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw InvalidDistribution("row " + std::to_string(s) + " sums to " + std::to_string(sum));
    }
  }
}

/// Membership mask of the unique closed communicating class of the shift
/// chain. Throws NotErgodic when there is more than one.
inline std::vector<char> recurrent_class(std::span<const double> table, std::size_t n,
                                         std::size_t num_states) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(num_states, kUnvisited), low(num_states), comp(num_states, kUnvisited);
  std::vector<char> on_stack(num_states, 0);
  std::vector<std::size_t> stack;
  struct Frame {
    std::size_t v;
    std::size_t next_edge;
  };
  std::vector<Frame> calls;
  std::size_t counter = 0, ncomp = 0;

  // Iterative Tarjan; the state graph can have 2^20+ vertices.
  for (std::size_t root = 0; root < num_states; ++root) {
    if (index[root] != kUnvisited) continue;
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    calls.push_back({root, 0});
    while (!calls.empty()) {
      const std::size_t v = calls.back().v;
      if (calls.back().next_edge < n) {
        const std::size_t a = calls.back().next_edge++;
        if (table[v * n + a] <= 0.0) continue;
        const std::size_t w = shift_state(v, a, n, num_states);
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          calls.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      calls.pop_back();
      if (!calls.empty()) low[calls.back().v] = std::min(low[calls.back().v], low[v]);
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
    }
  }

  std::vector<char> closed(ncomp, 1);
  for (std::size_t v = 0; v < num_states; ++v) {
    for (std::size_t a = 0; a < n; ++a) {
      if (table[v * n + a] <= 0.0) continue;
      if (comp[shift_state(v, a, n, num_states)] != comp[v]) closed[comp[v]] = 0;
    }
  }
  const auto nclosed = std::count(closed.begin(), closed.end(), 1);
  if (nclosed != 1) {
    throw NotErgodic("chain has " + std::to_string(nclosed) + " closed classes; a unique recurrent class is required");
  }
  const std::size_t target = static_cast<std::size_t>(std::find(closed.begin(), closed.end(), 1) - closed.begin());
  std::vector<char> mask(num_states);
  for (std::size_t v = 0; v < num_states; ++v) mask[v] = comp[v] == target;
  return mask;
}

/// L1 norm of (pi P - pi) for the shift chain.
inline double stationary_residual(std::span<const double> table, std::span<const double> pi,
                                  std::size_t n) {
  const std::size_t num_states = pi.size();
  std::vector<double> next(num_states, 0.0);
  for (std::size_t s = 0; s < num_states; ++s) {
    if (pi[s] == 0.0) continue;
    for (std::size_t a = 0; a < n; ++a) {
      next[shift_state(s, a, n, num_states)] += pi[s] * table[s * n + a];
    }
  }
  double r = 0.0;
  for (std::size_t s = 0; s < num_states; ++s) r += std::abs(next[s] - pi[s]);
  return r;
}

}  // namespace detail

/// Stationary distribution over the n^k states of an order-k chain whose
/// table holds P(a | state) at [state * n + a]. Power iteration on the lazy
/// chain (I + P) / 2, started uniform on the recurrent class, stopped at an
/// L1 residual of 1e-12.
inline std::vector<double> stationary_distribution(std::span<const double> table, std::size_t n,
                                                   std::size_t k) {
  const std::size_t num_states = detail::checked_state_count(n, k);
  detail::check_rows(table, n, num_states);
  const std::vector<char> recurrent = detail::recurrent_class(table, n, num_states);

  std::vector<double> pi(num_states, 0.0);
  const auto members = std::count(recurrent.begin(), recurrent.end(), 1);
  for (std::size_t s = 0; s < num_states; ++s) {
    if (recurrent[s]) pi[s] = 1.0 / static_cast<double>(members);
  }
  std::vector<double> next(num_states);
  for (std::uint64_t iter = 0; iter < kStationaryIterationCap; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < num_states; ++s) {
      if (pi[s] == 0.0) continue;
      for (std::size_t a = 0; a < n; ++a) {
        next[detail::shift_state(s, a, n, num_states)] += pi[s] * table[s * n + a];
      }
    }
    double total = 0.0;
    for (double v : next) total += v;
    double residual = 0.0;
    for (std::size_t s = 0; s < num_states; ++s) {
      next[s] /= total;
      residual += std::abs(next[s] - pi[s]);
    }
    if (residual <= kStationaryResidual) return pi;
    for (std::size_t s = 0; s < num_states; ++s) pi[s] = 0.5 * (pi[s] + next[s]);
  }
  throw NumericError("stationary distribution did not converge within the iteration cap");
}

/// Square first-order transition matrix convenience overload.
inline std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw InvalidDistribution("transition matrix must be square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return stationary_distribution(flat, rows.size(), 1);
}

/// Immutable stationary ergodic source of order k over {0, ..., n-1}.
class SourceModel {
 public:
  /// Position in a word being generated: `depth` is the number of symbols
  /// emitted so far (saturated at the order) and `context` indexes the last
  /// min(depth, k) of them.
  struct Cursor {
    std::size_t depth = 0;
    std::size_t context = 0;
  };

  SourceModel(std::size_t n, std::size_t k, std::vector<double> table,
              std::optional<std::vector<double>> initial = std::nullopt)
      : n_(n), k_(k), num_states_(detail::checked_state_count(n, k)), table_(std::move(table)) {
    detail::check_rows(table_, n_, num_states_);
    if (initial) {
      detail::recurrent_class(table_, n_, num_states_);
      check_initial(*initial);
      stationary_ = std::move(*initial);
    } else {
      stationary_ = stationary_distribution(table_, n_, k_);
    }
    build_tables();
  }

  std::size_t alphabet_size() const { return n_; }
  std::size_t order() const { return k_; }
  std::size_t num_states() const { return num_states_; }
  std::span<const double> table() const { return table_; }
  std::span<const double> row(std::size_t state) const {
    return std::span<const double>(table_).subspan(state * n_, n_);
  }
  double transition(std::size_t state, Symbol a) const { return table_[state * n_ + a]; }
  double log_transition(std::size_t state, Symbol a) const { return log_table_[state * n_ + a]; }
  std::span<const double> stationary() const { return stationary_; }

  /// Stationary single-symbol law P(X_1 = a).
  std::vector<double> symbol_marginal() const {
    if (k_ == 0) return {table_.begin(), table_.end()};
    return marginals_[1];
  }

  /// Every row reachable under the stationary law puts all mass on one symbol.
  bool deterministic() const { return deterministic_; }

  /// True for the i.i.d. uniform source (the ideal one-time-pad key).
  bool uniform_iid() const {
    if (k_ != 0) return false;
    for (double p : table_) {
      if (p != 1.0 / static_cast<double>(n_)) return false;
    }
    return true;
  }

  std::size_t advance_state(std::size_t state, Symbol a) const {
    return detail::shift_state(state, a, n_, num_states_);
  }

  Cursor advance(Cursor c, Symbol a) const {
    if (c.depth < k_) return {c.depth + 1, c.context * n_ + a};
    return {k_, advance_state(c.context, a)};
  }

  /// P(next = a | emitted prefix described by c).
  double conditional(Cursor c, Symbol a) const {
    if (c.depth >= k_) return table_[c.context * n_ + a];
    const double parent = marginals_[c.depth][c.context];
    if (parent <= 0.0) return 0.0;
    return marginals_[c.depth + 1][c.context * n_ + a] / parent;
  }

  double log_conditional(Cursor c, Symbol a) const {
    if (c.depth >= k_) return log_table_[c.context * n_ + a];
    const double child = log_marginals_[c.depth + 1][c.context * n_ + a];
    if (child == detail::kNegInf) return detail::kNegInf;
    return child - log_marginals_[c.depth][c.context];
  }

  /// Stationary probability of a word of length L <= k, by base-n index.
  double prefix_marginal(std::size_t len, std::uint64_t index) const { return marginals_[len][index]; }

 private:
  void check_initial(const std::vector<double>& pi) const {
    if (pi.size() != num_states_) {
      throw InvalidDistribution("initial distribution has " + std::to_string(pi.size()) +
                                " entries, expected " + std::to_string(num_states_));
    }
    double sum = 0.0;
    for (double p : pi) {
      if (!std::isfinite(p) || p < 0.0) throw InvalidDistribution("initial distribution has a negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) throw InvalidDistribution("initial distribution does not sum to 1");
    if (detail::stationary_residual(table_, pi, n_) > kStationaryCheckTolerance) {
      throw InvalidDistribution("initial distribution is not stationary for the transition table");
    }
  }

  void build_tables() {
    log_table_.resize(table_.size());
    std::transform(table_.begin(), table_.end(), log_table_.begin(), detail::safe_log2);

    marginals_.assign(k_ + 1, {});
    marginals_[k_] = stationary_;
    for (std::size_t len = k_; len-- > 0;) {
      const std::size_t size = static_cast<std::size_t>(saturating_pow(n_, len));
      marginals_[len].assign(size, 0.0);
      for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t a = 0; a < n_; ++a) marginals_[len][i] += marginals_[len + 1][i * n_ + a];
      }
    }
    log_marginals_.resize(k_ + 1);
    for (std::size_t len = 0; len <= k_; ++len) {
      log_marginals_[len].resize(marginals_[len].size());
      std::transform(marginals_[len].begin(), marginals_[len].end(), log_marginals_[len].begin(),
                     detail::safe_log2);
    }

    deterministic_ = true;
    for (std::size_t s = 0; s < num_states_ && deterministic_; ++s) {
      if (stationary_[s] <= 0.0) continue;
      for (std::size_t a = 0; a < n_; ++a) {
        const double p = table_[s * n_ + a];
        if (p != 0.0 && p != 1.0) {
          deterministic_ = false;
          break;
        }
      }
    }
  }

  std::size_t n_;
  std::size_t k_;
  std::size_t num_states_;
  std::vector<double> table_;
  std::vector<double> log_table_;
  std::vector<double> stationary_;
  std::vector<std::vector<double>> marginals_;  // [len][prefix index], len = 0..k
  std::vector<std::vector<double>> log_marginals_;
  bool deterministic_ = false;
};

inline SourceModel make_bernoulli(std::vector<double> probs) {
  if (probs.size() < 2) throw InvalidArgument("a Bernoulli source needs at least two symbols");
  const std::size_t n = probs.size();
  return SourceModel(n, 0, std::move(probs));
}

inline SourceModel make_uniform(std::size_t n) {
  if (n < 2) throw InvalidArgument("alphabet size must be at least 2");
  return make_bernoulli(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

inline SourceModel make_markov(std::size_t n, std::size_t k, std::vector<double> table,
                               std::optional<std::vector<double>> initial = std::nullopt) {
  return SourceModel(n, k, std::move(table), std::move(initial));
}

/// First-order chain from square rows.
inline SourceModel make_markov(const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw InvalidDistribution("transition matrix must be square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return SourceModel(rows.size(), 1, std::move(flat));
}

inline double log_block_prob(const SourceModel& model, std::span<const Symbol> u) {
  if (u.empty()) throw InvalidArgument("block probability of the empty word is undefined");
  check_word(u, model.alphabet_size());
  const std::size_t k = model.order();
  if (u.size() <= k) {
    return detail::safe_log2(model.prefix_marginal(u.size(), word_index(u, model.alphabet_size())));
  }
  std::size_t state = static_cast<std::size_t>(word_index(u.first(k), model.alphabet_size()));
  double lp = detail::safe_log2(model.stationary()[state]);
  for (std::size_t i = k; i < u.size() && lp != detail::kNegInf; ++i) {
    lp += model.log_transition(state, u[i]);
    state = model.advance_state(state, u[i]);
  }
  return lp;
}

/// P_X(u): probability that the first |u| symbols equal u.
inline double block_prob(const SourceModel& model, std::span<const Symbol> u) {
  if (u.size() > 64) return std::exp2(log_block_prob(model, u));
  if (u.empty()) throw InvalidArgument("block probability of the empty word is undefined");
  check_word(u, model.alphabet_size());
  const std::size_t k = model.order();
  if (u.size() <= k) return model.prefix_marginal(u.size(), word_index(u, model.alphabet_size()));
  std::size_t state = static_cast<std::size_t>(word_index(u.first(k), model.alphabet_size()));
  double p = model.stationary()[state];
  for (std::size_t i = k; i < u.size(); ++i) {
    p *= model.transition(state, u[i]);
    state = model.advance_state(state, u[i]);
  }
  return p;
}

/// Stationary sample of length t; a pure function of (model, t, seed).
inline Word sample(const SourceModel& model, std::size_t t, std::uint64_t seed) {
  if (t == 0) throw InvalidArgument("sample length must be at least 1");
  std::mt19937_64 rng(seed);
  const std::size_t n = model.alphabet_size();
  Word out(t);
  SourceModel::Cursor c;
  for (std::size_t i = 0; i < t; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double cum = 0.0;
    Symbol pick = 0;
    bool found = false;
    for (std::size_t a = 0; a < n; ++a) {
      const double p = model.conditional(c, static_cast<Symbol>(a));
      if (p <= 0.0) continue;
      pick = static_cast<Symbol>(a);
      cum += p;
      if (u < cum) {
        found = true;
        break;
      }
    }
    (void)found;  // rounding shortfall falls through to the last positive symbol
    out[i] = pick;
    c = model.advance(c, pick);
  }
  return out;
}

/// Exact entropy rate in bits/symbol: -sum_s pi(s) sum_a P(a|s) log P(a|s).
inline double entropy_rate(const SourceModel& model) {
  const std::size_t n = model.alphabet_size();
  double h = 0.0;
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    const double w = model.stationary()[s];
    if (w <= 0.0) continue;
    double row = 0.0;
    for (std::size_t a = 0; a < n; ++a) row += detail::entropy_term(model.transition(s, static_cast<Symbol>(a)));
    h += w * row;
  }
  return detail::clamp_unit(h, std::log2(static_cast<double>(n)));
}

inline double redundancy(const SourceModel& model) {
  const double log_n = std::log2(static_cast<double>(model.alphabet_size()));
  return detail::clamp_unit(log_n - entropy_rate(model), log_n);
}

/// Joint entropy H(X_1..X_len) in bits by exhaustive enumeration of A^len.
inline double block_entropy(const SourceModel& model, std::size_t len,
                            std::uint64_t cap = kDefaultBlockCap, unsigned workers = 1) {
  if (len == 0) return 0.0;
  const std::size_t n = model.alphabet_size();
  if (saturating_pow(n, len) > cap) {
    throw CapExceeded("enumerating " + std::to_string(n) + "^" + std::to_string(len) +
                      " blocks exceeds the enumeration cap of " + std::to_string(cap));
  }
  struct Node {
    SourceModel::Cursor cursor;
    double p = 1.0;
  };
  auto step = [&model](const Node& parent, std::size_t, Symbol a, Node& child) {
    child.p = parent.p * model.conditional(parent.cursor, a);
    if (child.p <= 0.0) return false;
    child.cursor = model.advance(parent.cursor, a);
    return true;
  };
  auto leaf = [](const Node& node, std::uint64_t, double& acc) { acc += detail::entropy_term(node.p); };
  const auto partial = detail::enumerate_words<double>(n, len, Node{}, step, leaf, workers);
  double h = 0.0;
  for (double v : partial) h += v;
  return h;
}

/// Per-letter m-order entropy h_m = H(X_1..X_{m+1}) / (m+1).
inline double block_entropy_hm(const SourceModel& model, std::size_t m,
                               std::uint64_t cap = kDefaultBlockCap, unsigned workers = 1) {
  return block_entropy(model, m + 1, cap, workers) / static_cast<double>(m + 1);
}

/// Additive-alpha smoothed order-k estimate from a symbol stream. Contexts
/// never observed get a uniform row when alpha is zero.
inline SourceModel train_markov(std::span<const Symbol> stream, std::size_t n, std::size_t k,
                                double alpha = kDefaultSmoothing) {
  if (stream.empty()) throw InvalidArgument("training stream is empty");
  if (stream.size() <= k) throw InvalidArgument("training stream must be longer than the model order");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("smoothing must be a finite non-negative number");
  check_word(stream, n);
  const std::size_t num_states = detail::checked_state_count(n, k);
  std::vector<double> counts(num_states * n, 0.0);
  std::size_t state = static_cast<std::size_t>(word_index(stream.first(k), n));
  for (std::size_t i = k; i < stream.size(); ++i) {
    counts[state * n + stream[i]] += 1.0;
    state = detail::shift_state(state, stream[i], n, num_states);
  }
  std::vector<double> table(num_states * n);
  for (std::size_t s = 0; s < num_states; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) total += counts[s * n + a];
    const double denom = total + alpha * static_cast<double>(n);
    for (std::size_t a = 0; a < n; ++a) {
      table[s * n + a] = denom > 0.0 ? (counts[s * n + a] + alpha) / denom : 1.0 / static_cast<double>(n);
    }
  }
  return SourceModel(n, k, std::move(table));
}

/// Bytes as symbols: one symbol per byte, or eight bits per byte (MSB first).
inline Word symbols_from_bytes(std::span<const std::uint8_t> bytes, bool bits) {
  Word out;
  out.reserve(bits ? bytes.size() * 8 : bytes.size());
  for (std::uint8_t b : bytes) {
    if (bits) {
      for (int i = 7; i >= 0; --i) out.push_back((b >> i) & 1u);
    } else {
      out.push_back(b);
    }
  }
  return out;
}

}  // namespace runkey
