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

#include "runkey/model_io.hpp"

#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace runkey {
namespace {

TEST(ModelTextTest, RoundTripIsExact) {
  std::mt19937_64 rng(8);
  for (std::size_t k : {0, 1, 2}) {
    const SourceModel m = oracle::random_model(rng, 3, k);
    const SourceModel back = parse_model_text(to_model_text(m));
    EXPECT_EQ(back.alphabet_size(), 3u);
    EXPECT_EQ(back.order(), k);
    EXPECT_TRUE(std::equal(m.table().begin(), m.table().end(), back.table().begin(), back.table().end()));
    EXPECT_EQ(entropy_rate(back), entropy_rate(m));
  }
}

TEST(ModelTextTest, CommentsBlankLinesAndStationary) {
  const SourceModel m = parse_model_text(
      "# sticky chain\n\n"
      "alphabet_size = 2\n"
      "order = 1   # first order\n"
      "row = 0.9 0.1\n"
      "row = 0.2\t0.8\r\n"
      "stationary = 0.6666666666666666 0.3333333333333333\n");
  EXPECT_EQ(m.transition(1, 1), 0.8);
  EXPECT_NEAR(m.stationary()[0], 2.0 / 3.0, 1e-15);
}

TEST(ModelTextTest, Errors) {
  EXPECT_THROW(parse_model_text("alphabet_size = 2\nrow = 0.5 0.5\n"), FormatError);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 1\nrow = 0.5 0.5\n"), FormatError);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 0\nrow = 0.5 0.4 0.1\n"), FormatError);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 0\nrow = 0.5 x\n"), FormatError);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 0\ncolour = red\n"), FormatError);
  EXPECT_THROW(parse_model_text("alphabet_size = two\n"), FormatError);
  EXPECT_THROW(parse_model_text("just words\n"), FormatError);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 0\nrow = 0.7 0.7\n"), InvalidDistribution);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 1\nrow = 1 0\nrow = 0 1\n"), NotErgodic);
  EXPECT_THROW(parse_model_text("alphabet_size = 2\norder = 1\nrow = 0.9 0.1\nrow = 0.2 0.8\nstationary = 0.5 0.5\n"),
               InvalidDistribution);
}

TEST(ModelFileTest, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "runkey_model_io_test.model";
  const SourceModel m = make_markov({{0.9, 0.1}, {0.2, 0.8}});
  save_model(path.string(), m);
  const SourceModel back = load_model(path.string());
  EXPECT_EQ(back.transition(0, 1), 0.1);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path.string()), InvalidArgument);
}

TEST(ModelSpecTest, InlineForms) {
  EXPECT_TRUE(parse_model_spec("uniform:4").uniform_iid());
  EXPECT_EQ(parse_model_spec("uniform:4").alphabet_size(), 4u);
  EXPECT_EQ(parse_model_spec("bernoulli:0.49,0.51").transition(0, 1), 0.51);
  const SourceModel chain = parse_model_spec("markov:0.9,0.1;0.2,0.8");
  EXPECT_EQ(chain.order(), 1u);
  EXPECT_EQ(chain.transition(1, 0), 0.2);
  EXPECT_EQ(parse_model_spec("markov:0.5,0.5;0.5,0.5;0.5,0.5;0.9,0.1").order(), 2u);
  EXPECT_EQ(parse_model_spec("markov:0.3,0.7").order(), 0u);
}

TEST(ModelSpecTest, Errors) {
  EXPECT_THROW(parse_model_spec("uniform:x"), FormatError);
  EXPECT_THROW(parse_model_spec("uniform:1"), InvalidArgument);
  EXPECT_THROW(parse_model_spec("bernoulli:0.5,0.6"), InvalidDistribution);
  EXPECT_THROW(parse_model_spec("markov:0.9,0.1;0.2,0.8;0.5,0.5"), FormatError);
  EXPECT_THROW(parse_model_spec("markov:0.9,0.1;0.2,0.3,0.5"), FormatError);
  EXPECT_THROW(parse_model_spec("/nonexistent/dir/model.txt"), InvalidArgument);
}

TEST(WordTextTest, FormatAndParse) {
  EXPECT_EQ(format_word(Word{0, 1, 1, 0}, 2), "0110");
  EXPECT_EQ(format_word(Word{3, 25, 10}, 26), "3pa");
  EXPECT_EQ(format_word(Word{255, 0, 17}, 256), "255 0 17");
  EXPECT_EQ(parse_word("0110", 2), (Word{0, 1, 1, 0}));
  EXPECT_EQ(parse_word("3PA\n", 26), (Word{3, 25, 10}));
  EXPECT_EQ(parse_word(" 255 0\n17 ", 256), (Word{255, 0, 17}));
  EXPECT_THROW(parse_word("01-1", 2), FormatError);
  EXPECT_THROW(parse_word("012", 2), SymbolRangeError);
  EXPECT_THROW(parse_word("256", 256), SymbolRangeError);
  std::mt19937_64 rng(1);
  for (std::size_t n : {2, 36, 37, 300}) {
    const Word w = oracle::random_word(rng, n, 50);
    EXPECT_EQ(parse_word(format_word(w, n), n), w);
  }
}

TEST(WordIndexTest, BaseNOrder) {
  EXPECT_EQ(word_index(Word{1, 0, 1}, 2), 5u);
  EXPECT_EQ(word_from_index(5, 2, 4), (Word{0, 1, 0, 1}));
  EXPECT_EQ(word_from_index(word_index(Word{2, 0, 1}, 3), 3, 3), (Word{2, 0, 1}));
  EXPECT_EQ(saturating_pow(2, 70), std::numeric_limits<std::uint64_t>::max());
}

}  // namespace
}  // namespace runkey
