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

#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "runkey/report.hpp"
#include "runkey/runkey.hpp"

namespace runkey::cli {
namespace {

using nlohmann::json;

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
  const char* kind() const noexcept override { return "config_error"; }
};

struct RunConfig {
  std::string command;
  std::string x_model = "uniform:2";
  std::string y_model = "uniform:2";
  std::size_t n = 0;
  std::string cipher = "additive";
  std::string t;
  std::size_t m = kDefaultBracketOrder;
  double eps = 0.05;
  double delta = 0.01;
  std::string tau = "0.1,0.05,0.01,0";
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::size_t seeds = 1;
  unsigned workers = 1;
  std::string out = "-";
  std::string format = "json";
  std::string z;
  double h_ref = 0.0;
  bool has_h_ref = false;
  std::string in;
  std::string key;
  bool text = false;
  std::string corpus = "-";
  bool bits = false;
  std::size_t order = 1;
  double alpha = kDefaultSmoothing;
  bool members = false;
  std::uint64_t cap = std::uint64_t{1} << 24;
  std::uint64_t block_cap = kDefaultBlockCap;
};

// Shortest form that reads back to the same double.
std::string exact(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

/// Fully resolved configuration as `key = value` lines accepted by --config.
/// Execution-only settings (workers, out, config) are left out so reports do
/// not depend on them.
std::string echo_config(const RunConfig& c) {
  std::ostringstream os;
  os << "# runkey " << c.command << "\n";
  os << "x-model = " << quoted(c.x_model) << "\n";
  os << "y-model = " << quoted(c.y_model) << "\n";
  os << "n = " << c.n << "\n";
  os << "cipher = " << quoted(c.cipher) << "\n";
  os << "t = " << quoted(c.t) << "\n";
  os << "m = " << c.m << "\n";
  os << "eps = " << exact(c.eps) << "\n";
  os << "delta = " << exact(c.delta) << "\n";
  os << "tau = " << quoted(c.tau) << "\n";
  os << "samples = " << c.samples << "\n";
  if (c.has_seed) os << "seed = " << c.seed << "\n";
  os << "seeds = " << c.seeds << "\n";
  os << "format = " << quoted(c.format) << "\n";
  os << "z = " << quoted(c.z) << "\n";
  if (c.has_h_ref) os << "h-ref = " << exact(c.h_ref) << "\n";
  os << "in = " << quoted(c.in) << "\n";
  os << "key = " << quoted(c.key) << "\n";
  os << "text = " << (c.text ? "true" : "false") << "\n";
  os << "corpus = " << quoted(c.corpus) << "\n";
  os << "bits = " << (c.bits ? "true" : "false") << "\n";
  os << "order = " << c.order << "\n";
  os << "alpha = " << exact(c.alpha) << "\n";
  os << "members = " << (c.members ? "true" : "false") << "\n";
  os << "cap = " << c.cap << "\n";
  os << "block-cap = " << c.block_cap << "\n";
  return os.str();
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    tok = tok.substr(b, tok.find_last_not_of(" \t") - b + 1);
    std::istringstream is(tok);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError(std::string("bad value '") + tok + "' in --" + what);
    out.push_back(v);
  }
  return out;
}

std::string read_file(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit(const RunConfig& c, std::ostream& out, const std::string& content) {
  if (c.out == "-") {
    out << content;
    out.flush();
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + c.out + "'");
  file << content;
}

void emit_report(const RunConfig& c, std::ostream& out, const json& result,
                 const std::optional<report::CsvSeries>& csv) {
  const std::string echo = echo_config(c);
  if (c.format == "csv") {
    if (!csv) throw ConfigError("--format csv is not available for '" + c.command + "'");
    emit(c, out, csv->str(echo));
    return;
  }
  json doc = {{"command", c.command}, {"config", echo}, {"result", result}};
  emit(c, out, doc.dump(2) + "\n");
}

struct Context {
  SourceModel xm;
  SourceModel ym;
  CipherSpec spec;
  ComputeOptions opts;
};

CipherSpec make_cipher(const RunConfig& c, std::size_t n) {
  if (c.cipher != "additive") throw ConfigError("unknown cipher '" + c.cipher + "' (available: additive)");
  return additive_cipher(n);
}

ComputeOptions compute_options(const RunConfig& c) {
  ComputeOptions o;
  o.posterior_cap = c.cap;
  o.block_cap = c.block_cap;
  o.workers = c.workers;
  return o;
}

Context load_context(const RunConfig& c) {
  SourceModel xm = parse_model_spec(c.x_model);
  SourceModel ym = parse_model_spec(c.y_model);
  const std::size_t n = c.n ? c.n : xm.alphabet_size();
  if (xm.alphabet_size() != n || ym.alphabet_size() != n) {
    throw ConfigError("model alphabets (" + std::to_string(xm.alphabet_size()) + ", " +
                      std::to_string(ym.alphabet_size()) + ") do not match n = " + std::to_string(n));
  }
  return {std::move(xm), std::move(ym), make_cipher(c, n), compute_options(c)};
}

void require_seed(const RunConfig& c) {
  if (!c.has_seed) throw ConfigError("--seed is required for '" + c.command + "'");
}

std::vector<std::size_t> lengths(const RunConfig& c) {
  auto ts = parse_list<std::size_t>(c.t, "t");
  for (std::size_t t : ts) {
    if (t == 0) throw ConfigError("--t values must be positive");
  }
  return ts;
}

std::vector<std::uint64_t> seed_list(const RunConfig& c) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < c.seeds; ++i) seeds.push_back(detail::derive_seed(c.seed, 0x5e5d, i));
  return seeds;
}

Word sampled_ciphertext(const Context& ctx, const RunConfig& c, std::size_t t) {
  const Word x = sample(ctx.xm, t, detail::derive_seed(c.seed, t, 0));
  const Word y = sample(ctx.ym, t, detail::derive_seed(c.seed, t, 1));
  return encrypt(ctx.spec, x, y);
}

Word ciphertext_from(const Context& ctx, const RunConfig& c) {
  if (!c.z.empty()) return parse_word(c.z, ctx.spec.alphabet_size());
  require_seed(c);
  const auto ts = lengths(c);
  if (ts.size() != 1) throw ConfigError("give --z, or --seed with a single --t to sample a ciphertext");
  return sampled_ciphertext(ctx, c, ts.front());
}

void cmd_train(const RunConfig& c, std::ostream& out) {
  const std::string data = read_file(c.corpus);
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
  const std::size_t n = c.bits ? 2 : (c.n ? c.n : 256);
  if (c.bits && c.n && c.n != 2) throw ConfigError("--bits implies n = 2");
  const SourceModel model = train_markov(symbols_from_bytes(bytes, c.bits), n, c.order, c.alpha);
  std::ostringstream os;
  std::istringstream echo(echo_config(c));
  for (std::string line; std::getline(echo, line);) os << "# " << line << "\n";
  os << to_model_text(model);
  emit(c, out, os.str());
}

void cmd_entropy(const RunConfig& c, std::ostream& out) {
  const SourceModel model = parse_model_spec(c.x_model);
  if (c.n && c.n != model.alphabet_size()) throw ConfigError("--n does not match the model alphabet");
  const ComputeOptions opts = compute_options(c);
  json blocks = json::array();
  report::CsvSeries csv("m");
  const double h = entropy_rate(model);
  const double r = redundancy(model);
  for (std::size_t m = 0; m <= c.m; ++m) {
    const double hm = block_entropy_hm(model, m, opts.block_cap, opts.workers);
    blocks.push_back({{"m", m}, {"h_m", report::number(hm)}});
    csv.add(std::to_string(m), "h_m", hm);
  }
  csv.add("rate", "entropy_rate", h);
  csv.add("rate", "redundancy", r);
  const json result = {{"n", model.alphabet_size()},
                       {"order", model.order()},
                       {"entropy_rate", report::number(h)},
                       {"redundancy", report::number(r)},
                       {"deterministic", model.deterministic()},
                       {"block_entropies", std::move(blocks)}};
  emit_report(c, out, result, csv);
}

void cmd_cipher(const RunConfig& c, std::ostream& out, Direction dir) {
  if (c.in.empty() || c.key.empty()) throw ConfigError("--in and --key are required");
  const std::size_t n = c.n ? c.n : 256;
  const CipherSpec spec = make_cipher(c, n);
  if (c.text) {
    const Word a = parse_word(read_file(c.in), n);
    const Word k = parse_word(read_file(c.key), n);
    const Word r = dir == Direction::kEncrypt ? encrypt(spec, a, k) : decrypt(spec, a, k);
    emit(c, out, format_word(r, n) + "\n");
    return;
  }
  if (n > 256) throw ConfigError("raw byte input needs n <= 256; use --text for larger alphabets");
  std::ifstream in(c.in, std::ios::binary), key(c.key, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + c.in + "'");
  if (!key) throw ConfigError("cannot open '" + c.key + "'");
  if (c.out == "-") {
    transform_stream(spec, dir, in, key, out);
    out.flush();
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + c.out + "'");
  transform_stream(spec, dir, in, key, file);
}

void cmd_posterior(const RunConfig& c, std::ostream& out) {
  const Context ctx = load_context(c);
  const Word z = ciphertext_from(ctx, c);
  const PosteriorTable table = posterior(ctx.xm, ctx.ym, ctx.spec, z, ctx.opts);
  const std::size_t n = ctx.spec.alphabet_size();
  if (c.format == "csv") {
    std::ostringstream os;
    std::istringstream echo(echo_config(c));
    for (std::string line; std::getline(echo, line);) os << "# " << line << "\n";
    report::write_posterior_csv(os, table);
    emit(c, out, os.str());
    return;
  }
  json entries = json::array();
  for (std::uint64_t i = 0; i < table.size(); ++i) {
    if (table.log_posterior[i] == detail::kNegInf) continue;
    entries.push_back({{"plaintext", format_word(table.plaintext(i), n)},
                       {"log2_posterior", report::number(table.log_posterior[i])}});
  }
  const json result = {{"ciphertext", format_word(z, n)},
                       {"log2_marginal", report::number(table.log_marginal)},
                       {"entries", std::move(entries)}};
  emit_report(c, out, result, std::nullopt);
}

void cmd_psi(const RunConfig& c, std::ostream& out) {
  const Context ctx = load_context(c);
  const std::size_t n = ctx.spec.alphabet_size();
  PsiOptions psi_opts;
  psi_opts.bracket_order = c.m;
  const std::optional<double> h_ref = c.has_h_ref ? std::optional<double>(c.h_ref) : std::nullopt;
  if (!c.z.empty()) {
    const Word z = parse_word(c.z, n);
    const PsiSet psi = build_psi(ctx.xm, ctx.ym, ctx.spec, z, c.eps, h_ref, ctx.opts, psi_opts);
    json result = report::to_json(psi, n, c.members);
    result["counting_bound_holds"] = counting_bound_holds(psi, c.delta);
    report::CsvSeries csv("t");
    const std::string t = std::to_string(psi.length());
    csv.add(t, "mass", psi.mass);
    csv.add(t, "delta_empirical", psi.delta_empirical());
    csv.add(t, "spread", psi.spread);
    csv.add(t, "growth", psi.growth);
    csv.add(t, "member_count", static_cast<double>(psi.member_count));
    csv.add(t, "h_ref", psi.h_ref);
    emit_report(c, out, result, csv);
    return;
  }
  require_seed(c);
  const auto ts = lengths(c);
  if (ts.empty()) throw ConfigError("psi needs --z or a --t list");
  EntropyBracket bracket;
  double ref;
  if (h_ref) {
    ref = *h_ref;
  } else {
    bracket = hXZ_bracket(ctx.xm, ctx.ym, ctx.spec, c.m, ctx.opts);
    ref = bracket.midpoint();
  }
  const auto series = psi_growth_series(ctx.xm, ctx.ym, ctx.spec, ts, c.eps, seed_list(c), ref, ctx.opts, psi_opts);
  json rows = json::array();
  for (const GrowthPoint& g : series) rows.push_back(report::to_json(g));
  const json result = {{"h_ref", report::number(ref)},
                       {"h_ref_slack", report::number(h_ref ? 0.0 : bracket.width())},
                       {"epsilon", report::number(c.eps)},
                       {"series", std::move(rows)}};
  emit_report(c, out, result, report::to_csv(series));
}

void cmd_smb(const RunConfig& c, std::ostream& out) {
  const Context ctx = load_context(c);
  require_seed(c);
  SmbConfig cfg;
  cfg.lengths = lengths(c);
  if (cfg.lengths.empty()) throw ConfigError("smb needs a --t list");
  cfg.samples = c.samples;
  cfg.epsilon = c.eps;
  cfg.delta = c.delta;
  cfg.seed = c.seed;
  cfg.bracket_order = c.m;
  if (c.has_h_ref) cfg.h_ref = c.h_ref;
  const SmbReport r = smb_experiment(ctx.xm, ctx.ym, ctx.spec, cfg, ctx.opts);
  emit_report(c, out, report::to_json(r), report::to_csv(r));
}

void cmd_bounds(const RunConfig& c, std::ostream& out) {
  const Context ctx = load_context(c);
  const SecrecyReport r = certify_bounds(ctx.xm, ctx.ym, ctx.spec, c.m, ctx.opts);
  json brackets = json::array();
  std::vector<EntropyBracket> series;
  for (std::size_t m = 0; m <= c.m; ++m) {
    series.push_back(m == c.m ? r.hxz : hXZ_bracket(ctx.xm, ctx.ym, ctx.spec, m, ctx.opts));
    brackets.push_back(report::to_json(series.back()));
  }
  json result = report::to_json(r);
  result["hxz_brackets"] = std::move(brackets);
  report::CsvSeries csv("m");
  for (const EntropyBracket& b : series) {
    csv.add(std::to_string(b.order_used), "hxz_lower", b.lower);
    csv.add(std::to_string(b.order_used), "hxz_upper", b.upper);
  }
  report::add_report_rows(csv, std::to_string(c.m), r);
  emit_report(c, out, result, csv);
}

void cmd_sweep(const RunConfig& c, std::ostream& out) {
  SourceModel xm = parse_model_spec(c.x_model);
  const std::size_t n = c.n ? c.n : xm.alphabet_size();
  if (n != 2 || xm.alphabet_size() != 2) throw ConfigError("sweep needs a binary plaintext model");
  const CipherSpec spec = make_cipher(c, n);
  const auto taus = parse_list<double>(c.tau, "tau");
  if (taus.empty()) throw ConfigError("sweep needs a --tau list");
  SweepPsiConfig psi;
  psi.lengths = lengths(c);
  psi.epsilon = c.eps;
  if (!psi.lengths.empty()) {
    require_seed(c);
    psi.seeds = seed_list(c);
  }
  PsiOptions psi_opts;
  psi_opts.bracket_order = c.m;
  const auto reports = robustness_sweep(xm, spec, taus, c.m, psi, compute_options(c), psi_opts);
  json rows = json::array();
  for (const SecrecyReport& r : reports) rows.push_back(report::to_json(r));
  emit_report(c, out, {{"reports", std::move(rows)}}, report::to_csv(reports));
}

int fail(std::ostream& err, const std::string& kind, int code, const std::string& message) {
  err << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"runkey: secrecy of running-key ciphers with imperfect keys", "runkey"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--x-model", c.x_model, "Plaintext model: file path or uniform:N / bernoulli:p,.. / markov:row;row")
      ->capture_default_str();
  app.add_option("--y-model", c.y_model, "Key model, same forms as --x-model")->capture_default_str();
  app.add_option("--n", c.n, "Alphabet size (0: take it from the models; 256 for raw bytes)");
  app.add_option("--cipher", c.cipher, "Coder/decoder pair")->check(CLI::IsMember({"additive"}));
  app.add_option("--t", c.t, "Length or comma-separated list of lengths");
  app.add_option("--m", c.m, "Block order for entropies and brackets")->capture_default_str();
  app.add_option("--eps", c.eps, "Band width epsilon")->capture_default_str();
  app.add_option("--delta", c.delta, "Mass deficit delta")->capture_default_str();
  app.add_option("--tau", c.tau, "Comma-separated key biases for sweep")->capture_default_str();
  app.add_option("--samples", c.samples, "Monte Carlo samples per length")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", c.seed, "Master seed (required for sampling)");
  app.add_option("--seeds", c.seeds, "Number of ciphertexts per length for psi growth series");
  app.add_option("--workers", c.workers, "Worker threads (0: hardware concurrency)");
  app.add_option("--out", c.out, "Output path, '-' for stdout");
  app.add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--z", c.z, "Ciphertext as symbol text");
  auto* href_opt = app.add_option("--h-ref", c.h_ref, "Reference h(X|Z); default is the bracket midpoint");
  app.add_option("--in", c.in, "Input file for encrypt/decrypt");
  app.add_option("--key", c.key, "Key file for encrypt/decrypt");
  app.add_flag("--text", c.text, "Symbol text instead of raw bytes");
  app.add_option("--corpus", c.corpus, "Training corpus path, '-' for stdin");
  app.add_flag("--bits", c.bits, "Expand each byte into 8 bits, most significant first");
  app.add_option("--order", c.order, "Markov order for train")->capture_default_str();
  app.add_option("--alpha", c.alpha, "Additive smoothing for train")->capture_default_str();
  app.add_flag("--members", c.members, "List psi members in the JSON report");
  app.add_option("--cap", c.cap, "Posterior enumeration cap (words)");
  app.add_option("--block-cap", c.block_cap, "Block enumeration cap");

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"train", "Estimate a Markov model from a corpus"},
      {"entropy", "Entropy rate, redundancy and block entropies of --x-model"},
      {"encrypt", "Encrypt --in with --key"},
      {"decrypt", "Decrypt --in with --key"},
      {"posterior", "Exact posterior over plaintexts for one ciphertext"},
      {"psi", "Typical deciphering set for --z, or its growth over a --t list"},
      {"smb", "Concentration of -(1/t) log P(X|Z) over a --t list"},
      {"bounds", "Entropy brackets and certified secrecy bounds"},
      {"sweep", "Key-bias robustness sweep over --tau"},
  };
  for (const Sub& s : subs) app.add_subcommand(s.name, s.help);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return fail(err, "config_error", kConfigError, e.what());
  }
  c.command = app.get_subcommands().front()->get_name();
  c.has_seed = seed_opt->count() > 0;
  c.has_h_ref = href_opt->count() > 0;

  try {
    if (c.command == "train") cmd_train(c, out);
    else if (c.command == "entropy") cmd_entropy(c, out);
    else if (c.command == "encrypt") cmd_cipher(c, out, Direction::kEncrypt);
    else if (c.command == "decrypt") cmd_cipher(c, out, Direction::kDecrypt);
    else if (c.command == "posterior") cmd_posterior(c, out);
    else if (c.command == "psi") cmd_psi(c, out);
    else if (c.command == "smb") cmd_smb(c, out);
    else if (c.command == "bounds") cmd_bounds(c, out);
    else if (c.command == "sweep") cmd_sweep(c, out);
  } catch (const CapExceeded& e) {
    return fail(err, e.kind(), kCapExceeded, e.what());
  } catch (const NumericError& e) {
    return fail(err, e.kind(), kNumericFailure, e.what());
  } catch (const Error& e) {
    return fail(err, e.kind(), kConfigError, e.what());
  } catch (const std::exception& e) {
    return fail(err, "numeric_error", kNumericFailure, e.what());
  }
  return kOk;
}

}  // namespace runkey::cli
