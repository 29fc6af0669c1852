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

// Typical deciphering sets, concentration experiments and certified secrecy
// bounds for running-key ciphers with imperfect keys.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "runkey/cipher.hpp"
#include "runkey/detail/log2_math.hpp"
#include "runkey/detail/parallel.hpp"
#include "runkey/error.hpp"
#include "runkey/inference.hpp"
#include "runkey/sources.hpp"

namespace runkey {

inline constexpr std::uint64_t kDefaultMemberCap = std::uint64_t{1} << 22;
inline constexpr std::size_t kDefaultBracketOrder = 10;
inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kBoundTolerance = 1e-9;

/// Plaintexts whose per-letter posterior log-probability lies strictly
/// within eps/2 of a reference conditional entropy:
///   | -(1/t) log2 P(x | z) - h_ref | < eps / 2.
struct PsiSet {
  Word ciphertext;
  double epsilon = 0.0;
  double h_ref = 0.0;
  /// Width of the h(X|Z) bracket h_ref was taken from; 0 when h_ref was given.
  double h_ref_slack = 0.0;
  /// Member indices (base-n plaintext values, ascending). Empty once
  /// member_count exceeds the member cap.
  std::vector<std::uint64_t> members;
  bool members_materialized = true;
  std::uint64_t member_count = 0;
  double mass = 0.0;
  /// max |(1/t)(log P(x1|z) - log P(x2|z))| over member pairs.
  double spread = 0.0;
  /// (1/t) log2 |members|; -inf for an empty set.
  double growth = detail::kNegInf;

  std::size_t length() const { return ciphertext.size(); }
  double delta_empirical() const { return 1.0 - mass; }
};

struct PsiOptions {
  std::uint64_t member_cap = kDefaultMemberCap;
  /// Block order m of the bracket used when no reference entropy is given.
  std::size_t bracket_order = kDefaultBracketOrder;
};

/// Exhaustive scan of a posterior table.
inline PsiSet build_psi(const PosteriorTable& table, double eps, double h_ref,
                        std::uint64_t member_cap = kDefaultMemberCap, unsigned workers = 1) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("epsilon must be positive");
  if (!std::isfinite(h_ref)) throw InvalidArgument("reference entropy must be finite");
  const double t = static_cast<double>(table.length());
  const double half = 0.5 * eps;

  struct Part {
    std::uint64_t count = 0;
    double mass = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> indices;
  };
  constexpr std::uint64_t kChunk = std::uint64_t{1} << 16;
  const std::uint64_t size = table.size();
  const std::size_t chunks = static_cast<std::size_t>((size + kChunk - 1) / kChunk);
  const auto parts = detail::map_indexed<Part>(chunks, workers, [&](std::size_t c) {
    Part part;
    const std::uint64_t end = std::min<std::uint64_t>(size, (c + 1) * kChunk);
    for (std::uint64_t i = c * kChunk; i < end; ++i) {
      const double lp = table.log_posterior[i];
      if (lp == detail::kNegInf) continue;
      const double rate = -lp / t;
      if (!(std::abs(rate - h_ref) < half)) continue;
      ++part.count;
      part.mass += std::exp2(lp);
      part.lo = std::min(part.lo, rate);
      part.hi = std::max(part.hi, rate);
      if (part.count <= member_cap) part.indices.push_back(i);
    }
    return part;
  });

  PsiSet psi;
  psi.ciphertext = table.ciphertext;
  psi.epsilon = eps;
  psi.h_ref = h_ref;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Part& part : parts) {
    psi.member_count += part.count;
    psi.mass += part.mass;
    lo = std::min(lo, part.lo);
    hi = std::max(hi, part.hi);
  }
  psi.mass = std::min(psi.mass, 1.0);
  psi.members_materialized = psi.member_count <= member_cap;
  if (psi.members_materialized) {
    psi.members.reserve(psi.member_count);
    for (const Part& part : parts) psi.members.insert(psi.members.end(), part.indices.begin(), part.indices.end());
  }
  psi.spread = psi.member_count > 1 ? hi - lo : 0.0;
  if (psi.member_count > 0) psi.growth = std::log2(static_cast<double>(psi.member_count)) / t;
  return psi;
}

/// Builds the posterior for z and scans it. Without h_ref, the midpoint of
/// the h(X|Z) bracket at the configured order is used and its width is
/// recorded as slack.
inline PsiSet build_psi(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                        std::span<const Symbol> z, double eps, std::optional<double> h_ref = std::nullopt,
                        const ComputeOptions& opts = {}, const PsiOptions& psi_opts = {}) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("epsilon must be positive");
  double slack = 0.0;
  if (!h_ref) {
    const EntropyBracket b = hXZ_bracket(xm, ym, spec, psi_opts.bracket_order, opts);
    h_ref = b.midpoint();
    slack = b.width();
  }
  const PosteriorTable table = posterior(xm, ym, spec, z, opts);
  PsiSet psi = build_psi(table, eps, *h_ref, psi_opts.member_cap, opts.workers);
  psi.h_ref_slack = slack;
  return psi;
}

/// |Psi| > (1 - delta) 2^{t (h_ref - eps)} whenever mass >= 1 - delta.
inline bool counting_bound_holds(const PsiSet& psi, double delta) {
  if (psi.mass < 1.0 - delta) return true;
  const double t = static_cast<double>(psi.length());
  const double log_count = psi.member_count ? std::log2(static_cast<double>(psi.member_count)) : detail::kNegInf;
  return log_count > std::log2(1.0 - delta) + t * (psi.h_ref - psi.epsilon);
}

struct GrowthPoint {
  std::size_t t = 0;
  std::uint64_t seed = 0;
  double growth = detail::kNegInf;
  double mass = 0.0;
  std::uint64_t member_count = 0;
};

/// Draws (x, y) for each (t, seed), enciphers, and measures Psi(z).
inline std::vector<GrowthPoint> psi_growth_series(const SourceModel& xm, const SourceModel& ym,
                                                  const CipherSpec& spec, std::span<const std::size_t> lengths,
                                                  double eps, std::span<const std::uint64_t> seeds,
                                                  std::optional<double> h_ref = std::nullopt,
                                                  const ComputeOptions& opts = {}, const PsiOptions& psi_opts = {}) {
  detail::check_compatible(xm, ym, spec);
  if (!h_ref) h_ref = hXZ_bracket(xm, ym, spec, psi_opts.bracket_order, opts).midpoint();
  std::vector<GrowthPoint> out;
  for (std::size_t t : lengths) {
    detail::check_cap(spec.alphabet_size(), t, opts.posterior_cap, "posterior table");
    for (std::uint64_t seed : seeds) {
      const Word x = sample(xm, t, detail::derive_seed(seed, t, 0));
      const Word y = sample(ym, t, detail::derive_seed(seed, t, 1));
      const Word z = encrypt(spec, x, y);
      const PsiSet psi = build_psi(posterior(xm, ym, spec, z, opts), eps, *h_ref, psi_opts.member_cap, opts.workers);
      out.push_back({t, seed, psi.growth, psi.mass, psi.member_count});
    }
  }
  return out;
}

struct SmbConfig {
  std::vector<std::size_t> lengths;
  std::size_t samples = 1000;
  double epsilon = 0.05;
  double delta = 0.01;
  std::uint64_t seed = 0;
  /// Reference h(X|Z); the bracket midpoint at bracket_order when absent.
  std::optional<double> h_ref;
  std::size_t bracket_order = kDefaultBracketOrder;
};

struct SmbRow {
  std::size_t t = 0;
  std::size_t samples = 0;
  /// Fraction of samples with | -(1/t) log2 P(x|z) - h_ref | < eps.
  double fraction = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error() const {
    return samples ? std::sqrt(fraction * (1.0 - fraction) / static_cast<double>(samples)) : 0.0;
  }
};

struct SmbReport {
  double h_ref = 0.0;
  double h_ref_slack = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<SmbRow> rows;
  /// Smallest tested length whose fraction reaches 1 - delta. An empirical
  /// stand-in for the (non-constructive) onset length of concentration.
  std::optional<std::size_t> onset_length;
};

/// Monte Carlo concentration of -(1/t) log2 P(X|Z) around h(X|Z). Sample i at
/// length t uses seeds derived from (seed, t, i) only.
inline SmbReport smb_experiment(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                const SmbConfig& cfg, const ComputeOptions& opts = {}) {
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (cfg.samples == 0) throw InvalidArgument("sample count must be positive");
  if (cfg.lengths.empty()) throw InvalidArgument("at least one length is required");
  const detail::CiphertextChain chain(xm, ym, spec, opts.state_cap);

  SmbReport report;
  report.epsilon = cfg.epsilon;
  report.delta = cfg.delta;
  if (cfg.h_ref) {
    report.h_ref = *cfg.h_ref;
  } else {
    const EntropyBracket b = hXZ_bracket(xm, ym, spec, cfg.bracket_order, opts);
    report.h_ref = b.midpoint();
    report.h_ref_slack = b.width();
  }

  constexpr std::size_t kSamplesPerTask = 64;
  for (std::size_t t : cfg.lengths) {
    if (t == 0) throw InvalidArgument("lengths must be positive");
    const std::size_t tasks = (cfg.samples + kSamplesPerTask - 1) / kSamplesPerTask;
    const auto stats = detail::map_indexed<std::vector<double>>(tasks, opts.workers, [&](std::size_t task) {
      std::vector<double> values;
      std::vector<double> alpha, next;
      const std::size_t end = std::min(cfg.samples, (task + 1) * kSamplesPerTask);
      for (std::size_t i = task * kSamplesPerTask; i < end; ++i) {
        const Word x = sample(xm, t, detail::derive_seed(cfg.seed, t, 2 * i));
        const Word y = sample(ym, t, detail::derive_seed(cfg.seed, t, 2 * i + 1));
        const Word z = encrypt(spec, x, y);
        const double log_joint = log_block_prob(xm, x) + log_block_prob(ym, y);
        const double log_z = detail::forward_log_marginal(chain, z, alpha, next);
        values.push_back(-(log_joint - log_z) / static_cast<double>(t));
      }
      return values;
    });
    SmbRow row;
    row.t = t;
    row.samples = cfg.samples;
    std::size_t inside = 0;
    double sum = 0.0;
    for (const auto& chunk : stats) {
      for (double v : chunk) {
        sum += v;
        if (std::abs(v - report.h_ref) < cfg.epsilon) ++inside;
      }
    }
    row.mean = sum / static_cast<double>(cfg.samples);
    double sq = 0.0;
    for (const auto& chunk : stats) {
      for (double v : chunk) sq += (v - row.mean) * (v - row.mean);
    }
    row.variance = cfg.samples > 1 ? sq / static_cast<double>(cfg.samples - 1) : 0.0;
    row.fraction = static_cast<double>(inside) / static_cast<double>(cfg.samples);
    if (!report.onset_length && row.fraction >= 1.0 - cfg.delta) report.onset_length = t;
    report.rows.push_back(row);
  }
  return report;
}

struct SecrecyReport {
  std::size_t alphabet_size = 0;
  double log_n = 0.0;
  double h_x = 0.0;
  double h_y = 0.0;
  double r_x = 0.0;
  double r_y = 0.0;
  EntropyBracket hxz;
  /// h(X) + h(Y) - log n.
  double secrecy_bound = 0.0;
  /// h(X) - r_Y, h(Y) - r_X, log n - (r_X + r_Y).
  std::array<double, 3> bound_redundancy{};
  std::vector<GrowthPoint> psi_growth;
  std::optional<double> tau;

  double hxz_estimate() const { return hxz.midpoint(); }
  double hxz_uncertainty() const { return hxz.width(); }
};

inline SecrecyReport certify_bounds(const SourceModel& xm, const SourceModel& ym, const CipherSpec& spec,
                                    std::size_t m, const ComputeOptions& opts = {}) {
  detail::check_compatible(xm, ym, spec);
  SecrecyReport r;
  r.alphabet_size = spec.alphabet_size();
  r.log_n = std::log2(static_cast<double>(r.alphabet_size));
  r.h_x = entropy_rate(xm);
  r.h_y = entropy_rate(ym);
  // Redundancies unclamped here so the three forms below stay algebraically tied.
  r.r_x = r.log_n - r.h_x;
  r.r_y = r.log_n - r.h_y;
  r.hxz = hXZ_bracket(xm, ym, spec, m, opts);
  r.secrecy_bound = r.h_x + r.h_y - r.log_n;
  r.bound_redundancy = {r.h_x - r.r_y, r.h_y - r.r_x, r.log_n - (r.r_x + r.r_y)};
  for (double b : r.bound_redundancy) {
    if (std::abs(b - r.secrecy_bound) > kIdentityTolerance) {
      throw NumericError("redundancy forms of the secrecy bound disagree beyond 1e-10");
    }
  }
  if (r.hxz.lower < r.secrecy_bound - kBoundTolerance) {
    throw NumericError("h(X|Z) bracket falls below h(X) + h(Y) - log n");
  }
  return r;
}

struct SweepPsiConfig {
  std::vector<std::size_t> lengths;
  double epsilon = 0.05;
  std::vector<std::uint64_t> seeds;
};

/// Key bias sweep: key model P(0) = 0.5 - tau, P(1) = 0.5 + tau over a binary
/// alphabet, one report per tau.
inline std::vector<SecrecyReport> robustness_sweep(const SourceModel& xm, const CipherSpec& spec,
                                                   std::span<const double> taus, std::size_t m,
                                                   const SweepPsiConfig& psi = {}, const ComputeOptions& opts = {},
                                                   const PsiOptions& psi_opts = {}) {
  if (spec.alphabet_size() != 2) throw InvalidArgument("the key-bias sweep is defined for a binary alphabet");
  for (double tau : taus) {
    if (!(tau >= 0.0 && tau < 0.5)) throw InvalidArgument("tau must lie in [0, 0.5)");
  }
  std::vector<SecrecyReport> out;
  for (double tau : taus) {
    const SourceModel ym = make_bernoulli({0.5 - tau, 0.5 + tau});
    SecrecyReport r = certify_bounds(xm, ym, spec, m, opts);
    r.tau = tau;
    if (!psi.lengths.empty()) {
      r.psi_growth = psi_growth_series(xm, ym, spec, psi.lengths, psi.epsilon, psi.seeds, r.hxz.midpoint(), opts,
                                       psi_opts);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace runkey
