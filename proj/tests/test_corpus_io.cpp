#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "xhmm/corpus_io.hpp"

using namespace xhmm;

namespace {

std::vector<std::vector<std::string>> words(const std::vector<Sentence>& ss) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : ss) out.push_back(surfaces(s));
  return out;
}

using Words = std::vector<std::vector<std::string>>;

}  // namespace

TEST(Pretokenized, BlankLinesSplitSentences) {
  std::istringstream in("a\nb\n\nc\n");
  const auto ss = read_pretokenized(in);
  EXPECT_EQ(words(ss), (Words{{"a", "b"}, {"c"}}));
  EXPECT_EQ(ss[1][0].sentence_index, 1u);
  EXPECT_EQ(ss[0][1].token_index, 1u);
}

TEST(Pretokenized, BlankRunsCollapseAndCrIsStripped) {
  std::istringstream in("\n\na\r\n\r\n\n\nb\r\n\n");
  EXPECT_EQ(words(read_pretokenized(in)), (Words{{"a"}, {"b"}}));
  std::istringstream empty("");
  EXPECT_TRUE(read_pretokenized(empty).empty());
}

TEST(Pretokenized, InvalidUtf8ReportsByteOffset) {
  std::istringstream in("ab\ncd\xff\n");
  try {
    read_pretokenized(in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 5"), std::string::npos) << e.what();
  }
}

TEST(Pretokenized, WriteReadRoundTrip) {
  std::istringstream in("Der\nHund\n.\n\nÜber\nalles\n");
  const auto ss = read_pretokenized(in);
  std::ostringstream out;
  write_pretokenized(out, ss);
  std::istringstream again(out.str());
  EXPECT_EQ(read_pretokenized(again), ss);
}

TEST(RawText, DetachesFinalPeriodAndBreaksSentence) {
  std::istringstream in("Der Hund bellt. Die Katze schläft!");
  EXPECT_EQ(words(tokenize_raw(in)), (Words{{"Der", "Hund", "bellt", "."}, {"Die", "Katze", "schläft", "!"}}));
}

TEST(RawText, AbbreviationsKeepTheirPeriod) {
  const auto abbrevs = load_abbreviations(read_file(fixtures::data_path("abbreviations.txt")));
  std::istringstream in("z.B. heute");
  EXPECT_EQ(words(tokenize_raw(in, abbrevs)), (Words{{"z.B.", "heute"}}));
  std::istringstream plain("z.B. heute");
  EXPECT_EQ(words(tokenize_raw(plain)), (Words{{"z.B", "."}, {"heute"}}));
}

TEST(RawText, PunctuationAndBlankLines) {
  std::istringstream in("(Er sagte: \"Ja\", dann ging er)\n\nNeu");
  EXPECT_EQ(words(tokenize_raw(in)),
            (Words{{"(", "Er", "sagte", ":", "\"", "Ja", "\"", ",", "dann", "ging", "er", ")"}, {"Neu"}}));
  std::istringstream dash("a -- b");
  EXPECT_EQ(words(tokenize_raw(dash)), (Words{{"a", "--", "b"}}));
}

TEST(Tagged, ReadsTokensAndTags) {
  const auto ts = fixtures::elwis();
  std::istringstream in("Der\tART\nHund\tNN\n\nJa\tPTKANT\textra\n");
  const auto ss = read_tagged(in, ts);
  ASSERT_EQ(ss.size(), 2u);
  EXPECT_EQ(ss[0][1].token.surface, "Hund");
  EXPECT_EQ(ss[0][1].gold, ts.require("NN"));
  EXPECT_EQ(ss[1][0].gold, ts.require("PTKANT"));
}

TEST(Tagged, ErrorsCiteTheLine) {
  const auto ts = fixtures::elwis();
  std::istringstream missing("Der\tART\nHund NN\n");
  try {
    read_tagged(missing, ts);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream unknown("Der\tART\n\nHund\tXX\n");
  try {
    read_tagged(unknown, ts);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Tagged, RandomRoundTrips) {
  const auto ts = fixtures::elwis();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<TagId> tag(0, static_cast<TagId>(ts.size() - 1));
  std::uniform_int_distribution<int> len(1, 12), ch(0, 5);
  const char* pieces[] = {"a", "ü", "Z", "7", ".", "ß"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TaggedSentence> corpus(1 + trial % 5);
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      const int n = len(rng);
      for (int t = 0; t < n; ++t) {
        std::string w;
        for (int k = 0; k <= ch(rng); ++k) w += pieces[ch(rng)];
        corpus[s].push_back(TaggedToken{Token{w, s, static_cast<std::size_t>(t)}, tag(rng)});
      }
    }
    std::ostringstream out;
    write_tagged(out, corpus, ts);
    std::istringstream in(out.str());
    EXPECT_EQ(read_tagged(in, ts), corpus);
  }
}

TEST(Tagged, BundledSampleParses) {
  const auto ts = fixtures::elwis();
  std::istringstream in(read_file(fixtures::data_path("sample.tagged")));
  const auto ss = read_tagged(in, ts);
  std::size_t tokens = 0;
  for (const auto& s : ss) tokens += s.size();
  EXPECT_EQ(ss.size(), 14u);
  EXPECT_EQ(tokens, 88u);
}
