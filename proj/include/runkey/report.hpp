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

// JSON documents and flat CSV series for experiment results. Every
// floating-point value is printed with 12 significant digits; non-finite
// values become null in JSON and inf/-inf/nan in CSV.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "runkey/inference.hpp"
#include "runkey/secrecy.hpp"
#include "runkey/word.hpp"

namespace runkey::report {

using nlohmann::json;

inline std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// The double nearest to v rounded to 12 significant digits; its shortest
/// round-trip form (what the JSON writer emits) has at most 12 digits.
inline json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt12(v).c_str(), nullptr);
}

inline json to_json(const EntropyBracket& b) {
  return {{"m", b.order_used}, {"lower", number(b.lower)}, {"upper", number(b.upper)}};
}

inline json to_json(const PsiSet& psi, std::size_t n, bool include_members = false) {
  json j = {{"t", psi.length()},
            {"ciphertext", format_word(psi.ciphertext, n)},
            {"epsilon", number(psi.epsilon)},
            {"h_ref", number(psi.h_ref)},
            {"h_ref_slack", number(psi.h_ref_slack)},
            {"member_count", psi.member_count},
            {"mass", number(psi.mass)},
            {"delta_empirical", number(psi.delta_empirical())},
            {"spread", number(psi.spread)},
            {"growth", number(psi.growth)},
            {"members_materialized", psi.members_materialized}};
  if (include_members && psi.members_materialized) {
    json members = json::array();
    for (std::uint64_t idx : psi.members) members.push_back(format_word(word_from_index(idx, n, psi.length()), n));
    j["members"] = std::move(members);
  }
  return j;
}

inline json to_json(const GrowthPoint& g) {
  return {{"t", g.t},
          {"seed", g.seed},
          {"growth", number(g.growth)},
          {"mass", number(g.mass)},
          {"member_count", g.member_count}};
}

inline json to_json(const SmbReport& r) {
  json rows = json::array();
  for (const SmbRow& row : r.rows) {
    rows.push_back({{"t", row.t},
                    {"samples", row.samples},
                    {"fraction", number(row.fraction)},
                    {"std_error", number(row.std_error())},
                    {"mean", number(row.mean)},
                    {"variance", number(row.variance)}});
  }
  json j = {{"h_ref", number(r.h_ref)},
            {"h_ref_slack", number(r.h_ref_slack)},
            {"epsilon", number(r.epsilon)},
            {"delta", number(r.delta)},
            {"rows", std::move(rows)}};
  // Empirical onset, not an asymptotic guarantee.
  j["onset_length_empirical"] = r.onset_length ? json(*r.onset_length) : json(nullptr);
  return j;
}

inline json to_json(const SecrecyReport& r) {
  json growth = json::array();
  for (const GrowthPoint& g : r.psi_growth) growth.push_back(to_json(g));
  json j = {{"n", r.alphabet_size},
            {"log_n", number(r.log_n)},
            {"h_x", number(r.h_x)},
            {"h_y", number(r.h_y)},
            {"r_x", number(r.r_x)},
            {"r_y", number(r.r_y)},
            {"hxz_bracket", to_json(r.hxz)},
            {"hxz_estimate", number(r.hxz_estimate())},
            {"hxz_uncertainty", number(r.hxz_uncertainty())},
            {"secrecy_bound", number(r.secrecy_bound)},
            {"bound_h_x_minus_r_y", number(r.bound_redundancy[0])},
            {"bound_h_y_minus_r_x", number(r.bound_redundancy[1])},
            {"bound_log_n_minus_redundancies", number(r.bound_redundancy[2])},
            {"psi_growth_series", std::move(growth)}};
  j["tau"] = r.tau ? number(*r.tau) : json(nullptr);
  return j;
}

/// Long-format series: one (key, metric, value) row per measurement.
class CsvSeries {
 public:
  explicit CsvSeries(std::string key_column) : key_column_(std::move(key_column)) {}

  void add(const std::string& key, const std::string& metric, double value) {
    rows_ += key + ',' + metric + ',' + fmt12(value) + '\n';
  }
  void add(double key, const std::string& metric, double value) { add(fmt12(key), metric, value); }

  /// Header comment lines (each prefixed with "# "), column names, rows.
  std::string str(const std::string& header = {}) const {
    std::ostringstream os;
    std::istringstream lines(header);
    for (std::string line; std::getline(lines, line);) os << "# " << line << '\n';
    os << key_column_ << ",metric,value\n" << rows_;
    return os.str();
  }

 private:
  std::string key_column_;
  std::string rows_;
};

inline CsvSeries to_csv(const SmbReport& r) {
  CsvSeries csv("t");
  for (const SmbRow& row : r.rows) {
    const std::string t = std::to_string(row.t);
    csv.add(t, "fraction", row.fraction);
    csv.add(t, "std_error", row.std_error());
    csv.add(t, "mean", row.mean);
    csv.add(t, "variance", row.variance);
    csv.add(t, "h_ref", r.h_ref);
  }
  return csv;
}

inline void add_report_rows(CsvSeries& csv, const std::string& key, const SecrecyReport& r) {
  csv.add(key, "h_x", r.h_x);
  csv.add(key, "h_y", r.h_y);
  csv.add(key, "r_x", r.r_x);
  csv.add(key, "r_y", r.r_y);
  csv.add(key, "hxz_lower", r.hxz.lower);
  csv.add(key, "hxz_upper", r.hxz.upper);
  csv.add(key, "hxz_estimate", r.hxz_estimate());
  csv.add(key, "secrecy_bound", r.secrecy_bound);
  csv.add(key, "bound_h_x_minus_r_y", r.bound_redundancy[0]);
  csv.add(key, "bound_h_y_minus_r_x", r.bound_redundancy[1]);
  csv.add(key, "bound_log_n_minus_redundancies", r.bound_redundancy[2]);
}

inline CsvSeries to_csv(const std::vector<SecrecyReport>& sweep) {
  CsvSeries csv("tau");
  for (const SecrecyReport& r : sweep) add_report_rows(csv, fmt12(r.tau.value_or(0.0)), r);
  return csv;
}

inline CsvSeries to_csv(const std::vector<GrowthPoint>& series) {
  CsvSeries csv("t");
  for (const GrowthPoint& g : series) {
    const std::string t = std::to_string(g.t);
    csv.add(t, "growth", g.growth);
    csv.add(t, "mass", g.mass);
    csv.add(t, "member_count", static_cast<double>(g.member_count));
  }
  return csv;
}

inline CsvSeries to_csv(const std::vector<EntropyBracket>& brackets) {
  CsvSeries csv("m");
  for (const EntropyBracket& b : brackets) {
    const std::string m = std::to_string(b.order_used);
    csv.add(m, "lower", b.lower);
    csv.add(m, "upper", b.upper);
  }
  return csv;
}

/// plaintext,log2_posterior for every plaintext with non-zero posterior.
inline void write_posterior_csv(std::ostream& os, const PosteriorTable& table) {
  os << "plaintext,log2_posterior\n";
  for (std::uint64_t i = 0; i < table.size(); ++i) {
    const double lp = table.log_posterior[i];
    if (lp == detail::kNegInf) continue;
    os << format_word(table.plaintext(i), table.alphabet_size) << ',' << fmt12(lp) << '\n';
  }
}

}  // namespace runkey::report
