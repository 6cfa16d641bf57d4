#include <gtest/gtest.h>

#include <fstream>

#include "mrg/corpus.hpp"
#include "mrg/util.hpp"
#include "temp_dir.hpp"

using namespace mrg;

namespace {

void write(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t n) {
  static const char* pool[] = {"cat", "dog", "Sun", "moon", "tree", "RIVER", "stone", "bird", "fish", "rain"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng() % 10]);
  return out;
}

}  // namespace

TEST(LoadCorpus, EmptyFileGivesNoDocuments) {
  TempDir dir;
  write(dir / "c.jsonl", "");
  const auto r = load_corpus(dir / "c.jsonl", CorpusFormat::jsonl);
  EXPECT_TRUE(r.documents.empty());
  EXPECT_EQ(r.skipped, 0u);
}

TEST(LoadCorpus, SingleRecord) {
  TempDir dir;
  write(dir / "c.jsonl", R"({"source": "Hi there.", "target": "One. Two!"})" "\n");
  const auto r = load_corpus(dir / "c.jsonl", CorpusFormat::jsonl);
  ASSERT_EQ(r.documents.size(), 1u);
  EXPECT_EQ(r.documents[0].source, "Hi there.");
  EXPECT_EQ(r.documents[0].target_sentences, (std::vector<std::string>{"One.", "Two!"}));
}

TEST(LoadCorpus, RecordMissingTargetIsSkippedAndCounted) {
  set_warnings_enabled(false);
  TempDir dir;
  write(dir / "c.jsonl",
        "{\"source\": \"a\", \"target\": \"b.\"}\n{\"source\": \"c\"}\n{\"source\": \"d\", \"target\": \"e.\"}\n");
  const auto r = load_corpus(dir / "c.jsonl", CorpusFormat::jsonl);
  EXPECT_EQ(r.documents.size(), 2u);
  EXPECT_EQ(r.skipped, 1u);
  set_warnings_enabled(true);
}

TEST(LoadCorpus, TsvFormat) {
  TempDir dir;
  write(dir / "c.tsv", "the source\tfirst. second.\n");
  const auto r = load_corpus(dir / "c.tsv", CorpusFormat::tsv);
  ASSERT_EQ(r.documents.size(), 1u);
  EXPECT_EQ(r.documents[0].target_sentences.size(), 2u);
}

TEST(LoadCorpus, UnreadableFileIsDataError) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl", CorpusFormat::jsonl), DataError);
}

TEST(SplitSentences, Examples) {
  EXPECT_EQ(split_sentences("a. b! c?"), (std::vector<std::string>{"a.", "b!", "c?"}));
  EXPECT_EQ(split_sentences("no terminal punctuation"), (std::vector<std::string>{"no terminal punctuation"}));
  EXPECT_TRUE(split_sentences("").empty());
}

TEST(SplitSentences, CjkTerminals) {
  EXPECT_EQ(split_sentences("你好。再见！"), (std::vector<std::string>{"你好。", "再见！"}));
}

TEST(SplitSentences, NeverDropsNonWhitespace) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "ab .!?\t\nxy,";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto len = rng() % 40;
    for (std::size_t i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
    std::string joined;
    for (const auto& s : split_sentences(text)) joined += s;
    std::string expected;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) expected += c;
    std::string got;
    for (char c : joined)
      if (!std::isspace(static_cast<unsigned char>(c))) got += c;
    ASSERT_EQ(got, expected) << "input: " << text;
  }
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The cat sat."), (std::vector<std::string>{"the", "cat", "sat", "."}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("A A a"), (std::vector<std::string>{"a", "a", "a"}));
}

TEST(Tokenize, PunctuationIsolated) {
  EXPECT_EQ(tokenize("don't,stop!"), (std::vector<std::string>{"don", "'", "t", ",", "stop", "!"}));
  EXPECT_TRUE(is_punctuation_token("!"));
  EXPECT_FALSE(is_punctuation_token("a!"));
}

TEST(BuildVocab, UnderLimit) {
  std::vector<Document> docs{{"a b c", {"d e."}}};
  const auto v = build_vocab(docs, 16000);
  EXPECT_EQ(v.size(), 11u);  // 5 words, ".", and 5 specials
}

TEST(BuildVocab, FiveDistinctWordsGiveTenEntries) {
  std::vector<Document> docs{{"a b c", {"d e"}}};
  EXPECT_EQ(build_vocab(docs, 16000).size(), 10u);
}

TEST(BuildVocab, LimitKeepsMostFrequent) {
  // counts: w0 x10, w1 x9, ... w9 x1
  std::string text;
  for (int w = 0; w < 10; ++w)
    for (int c = 0; c < 10 - w; ++c) text += "w" + std::to_string(w) + " ";
  std::vector<Document> docs{{text, {"w0"}}};
  const auto v = build_vocab(docs, 8);
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v.token(5), "w0");
  EXPECT_EQ(v.token(6), "w1");
  EXPECT_EQ(v.token(7), "w2");
  EXPECT_FALSE(v.contains("w3"));
}

TEST(BuildVocab, TiesAreLexicographic) {
  std::vector<Document> docs{{"zeta alpha", {"mid"}}};
  const auto v = build_vocab(docs, 7);
  EXPECT_EQ(v.token(5), "alpha");
  EXPECT_EQ(v.token(6), "mid");
}

TEST(BuildVocab, SpecialsFixedAndLimitEnforced) {
  std::vector<Document> docs{{"x y z", {"x"}}};
  EXPECT_THROW(build_vocab(docs, 5), std::invalid_argument);
  const auto v = build_vocab(docs, 6);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.token(Vocabulary::kSep), "<sep>");
  EXPECT_EQ(v.token(Vocabulary::kBos), "<bos>");
  EXPECT_EQ(v.token(Vocabulary::kEos), "<eos>");
}

TEST(EncodeDecode, RoundTripUnknownAndRange) {
  std::vector<Document> docs{{"the cat sat", {"on the mat."}}};
  const auto v = build_vocab(docs, 100);
  const std::vector<std::string> toks{"the", "mat", "cat"};
  EXPECT_EQ(decode(encode(toks, v), v), toks);
  const std::vector<std::string> unk{"zebra"};
  EXPECT_EQ(encode(unk, v), (std::vector<std::int32_t>{Vocabulary::kUnk}));
  const std::vector<std::int32_t> bad{static_cast<std::int32_t>(v.size())};
  EXPECT_THROW(decode(bad, v), std::out_of_range);
}

TEST(EncodeDecode, RoundTripProperty) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Document> docs;
    for (int d = 0; d < 4; ++d) {
      std::string s;
      for (const auto& w : random_words(rng, 8)) s += w + " ";
      docs.push_back({s, {s}});
    }
    const auto v = build_vocab(docs, 6 + rng() % 10);
    EXPECT_LE(v.size(), 16u);
    std::vector<std::string> in_vocab;
    for (auto t : v.regular_tokens()) in_vocab.push_back(t);
    EXPECT_EQ(decode(encode(in_vocab, v), v), in_vocab);
    EXPECT_EQ(build_vocab(docs, 16).hash(), build_vocab(docs, 16).hash());
  }
}

TEST(VocabularyFile, SaveLoadRoundTrip) {
  TempDir dir;
  std::vector<Document> docs{{"b a c", {"a."}}};
  const auto v = build_vocab(docs, 100);
  v.save(dir / "vocab.txt");
  const auto text = read_file(dir / "vocab.txt");
  EXPECT_EQ(text.substr(0, 2), "a\n");  // line 0 holds id 5
  EXPECT_EQ(Vocabulary::load(dir / "vocab.txt"), v);
}

TEST(DocumentSentences, SourceThenTargets) {
  Document d{"src", {"one.", "two."}};
  EXPECT_EQ(document_sentences(d), (std::vector<std::string>{"src", "one.", "two."}));
}
