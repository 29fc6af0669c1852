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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gtest/gtest.h"

namespace runkey::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("runkey_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  static void write(const std::string& p, const std::string& data) {
    std::ofstream(p, std::ios::binary) << data;
  }

  fs::path dir_;
};

TEST_F(CliTest, EntropyOfBiasedKey) {
  const Result r = invoke({"entropy", "--x-model", "bernoulli:0.49,0.51", "--m", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["command"], "entropy");
  EXPECT_EQ(doc["result"]["entropy_rate"].get<double>(), 0.999711441753);
  EXPECT_NE(r.out.find("0.999711"), std::string::npos);
  EXPECT_EQ(doc["result"]["block_entropies"].size(), 3u);
  EXPECT_NE(doc["config"].get<std::string>().find("x-model = \"bernoulli:0.49,0.51\""), std::string::npos);
}

TEST_F(CliTest, EntropyCsv) {
  const Result r = invoke({"entropy", "--x-model", "uniform:2", "--m", "1", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# # runkey entropy\n", 0), 0u);
  EXPECT_NE(r.out.find("m,metric,value\n0,h_m,1\n1,h_m,1\nrate,entropy_rate,1\nrate,redundancy,0\n"),
            std::string::npos);
}

TEST_F(CliTest, ByteEncryptDecryptRoundTrip) {
  std::mt19937_64 rng(3);
  std::string plain(70000, '\0'), key(70000, '\0');
  for (auto& c : plain) c = static_cast<char>(rng());
  for (auto& c : key) c = static_cast<char>(rng());
  write(path("plain.bin"), plain);
  write(path("key.bin"), key);
  ASSERT_EQ(invoke({"encrypt", "--in", path("plain.bin"), "--key", path("key.bin"), "--out", path("c.bin")}).code, 0);
  EXPECT_NE(slurp(path("c.bin")), plain);
  ASSERT_EQ(invoke({"decrypt", "--in", path("c.bin"), "--key", path("key.bin"), "--out", path("p.bin")}).code, 0);
  EXPECT_EQ(slurp(path("p.bin")), plain);
}

TEST_F(CliTest, TextEncrypt) {
  write(path("x.txt"), "0110\n");
  write(path("y.txt"), "1111\n");
  const Result r = invoke({"encrypt", "--text", "--n", "2", "--in", path("x.txt"), "--key", path("y.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "1001\n");
  write(path("short.txt"), "11\n");
  const Result bad = invoke({"encrypt", "--text", "--n", "2", "--in", path("x.txt"), "--key", path("short.txt")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(json::parse(bad.err)["error"], "length_mismatch");
}

TEST_F(CliTest, SweepReportsAreMonotone) {
  const Result r = invoke({"sweep", "--x-model", "markov:0.9,0.1;0.2,0.8", "--tau", "0.1,0.05,0.01,0", "--m", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json reports = json::parse(r.out)["result"]["reports"];
  ASSERT_EQ(reports.size(), 4u);
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_GE(reports[i]["secrecy_bound"].get<double>(), reports[i - 1]["secrecy_bound"].get<double>());
  }
  EXPECT_EQ(reports[3]["tau"].get<double>(), 0.0);
  EXPECT_EQ(reports[3]["r_y"].get<double>(), 0.0);
}

TEST_F(CliTest, ConfigEchoReproducesReport) {
  const std::vector<std::string> args{"smb",         "--x-model", "markov:0.9,0.1;0.2,0.8", "--y-model",
                                      "bernoulli:0.45,0.55", "--t", "20,200", "--samples", "50",
                                      "--seed",      "17",        "--m", "6", "--format", "csv",
                                      "--out",       path("first.csv")};
  ASSERT_EQ(invoke(args).code, 0);
  const std::string first = slurp(path("first.csv"));

  // Strip the "# " prefix to recover the echoed key = value config.
  std::istringstream lines(first);
  std::string config;
  for (std::string line; std::getline(lines, line) && line.rfind("# ", 0) == 0;) config += line.substr(2) + "\n";
  write(path("run.conf"), config);
  ASSERT_EQ(invoke({"smb", "--config", path("run.conf"), "--out", path("second.csv")}).code, 0);
  EXPECT_EQ(slurp(path("second.csv")), first);
}

TEST_F(CliTest, WorkerCountDoesNotChangeOutput) {
  const auto run_with = [&](const std::string& workers) {
    return invoke({"psi", "--x-model", "markov:0.9,0.1;0.2,0.8", "--y-model", "bernoulli:0.45,0.55", "--t", "10,14",
                   "--seed", "5", "--seeds", "2", "--m", "6", "--workers", workers});
  };
  const Result a = run_with("1"), b = run_with("3");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, PsiForGivenCiphertext) {
  const Result r = invoke({"psi", "--x-model", "uniform:2", "--y-model", "uniform:2", "--z", "0110", "--members"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json res = json::parse(r.out)["result"];
  EXPECT_EQ(res["member_count"], 16);
  EXPECT_EQ(res["members"].size(), 16u);
  EXPECT_EQ(res["growth"].get<double>(), 1.0);
  EXPECT_TRUE(res["counting_bound_holds"].get<bool>());
}

TEST_F(CliTest, PosteriorCsv) {
  const Result r = invoke({"posterior", "--x-model", "uniform:2", "--y-model", "bernoulli:0.49,0.51", "--z", "11",
                           "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("plaintext,log2_posterior\n00,-1.94286169"), std::string::npos) << r.out;
}

TEST_F(CliTest, BoundsHasBracketSeries) {
  const Result r = invoke({"bounds", "--x-model", "bernoulli:0.7,0.3", "--y-model", "bernoulli:0.6,0.4", "--m", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json res = json::parse(r.out)["result"];
  EXPECT_EQ(res["hxz_brackets"].size(), 4u);
  EXPECT_EQ(res["secrecy_bound"].get<double>(), 0.852241493685);
  EXPECT_EQ(res["hxz_estimate"].get<double>(), 0.856863054865);
}

TEST_F(CliTest, TrainWritesLoadableModel) {
  std::string corpus;
  for (int i = 0; i < 500; ++i) corpus += "the quick brown fox jumps over the lazy dog. ";
  write(path("corpus.txt"), corpus);
  ASSERT_EQ(invoke({"train", "--corpus", path("corpus.txt"), "--bits", "--order", "2", "--alpha", "0.5", "--out",
                    path("model.txt")})
                .code,
            0);
  const Result r = invoke({"entropy", "--x-model", path("model.txt"), "--m", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const double h = json::parse(r.out)["result"]["entropy_rate"].get<double>();
  EXPECT_GT(h, 0.1);
  EXPECT_LT(h, 1.0);
}

TEST_F(CliTest, ErrorExitCodes) {
  const Result unknown = invoke({"entropy", "--bogus"});
  EXPECT_EQ(unknown.code, 2);
  const Result no_sub = invoke({});
  EXPECT_EQ(no_sub.code, 2);
  const Result bad_dist = invoke({"entropy", "--x-model", "bernoulli:0.5,0.6"});
  EXPECT_EQ(bad_dist.code, 2);
  EXPECT_EQ(json::parse(bad_dist.err)["error"], "invalid_distribution");
  const Result no_seed = invoke({"smb", "--t", "10"});
  EXPECT_EQ(no_seed.code, 2);
  EXPECT_NE(no_seed.err.find("--seed"), std::string::npos);

  const Result cap = invoke({"posterior", "--z", "0101010101", "--cap", "100"});
  EXPECT_EQ(cap.code, 3);
  const json e = json::parse(cap.err);
  EXPECT_EQ(e["error"], "cap_exceeded");
  EXPECT_EQ(e["exit_code"], 3);
  EXPECT_NE(e["message"].get<std::string>().find("2^10"), std::string::npos);
  EXPECT_EQ(cap.err.find('\n'), cap.err.size() - 1);  // one line

  const Result impossible =
      invoke({"posterior", "--x-model", "bernoulli:1,0", "--y-model", "bernoulli:1,0", "--z", "1"});
  EXPECT_EQ(impossible.code, 4);
  EXPECT_EQ(json::parse(impossible.err)["error"], "numeric_error");
}

}  // namespace
}  // namespace runkey::cli
