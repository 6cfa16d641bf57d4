#pragma once

// Documents, sentence segmentation, tokenization and the bounded vocabulary
// shared by graph construction and both neural models.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mrg {

/// One parallel sample: a source context and its target sentences.
struct Document {
  std::string source;
  std::vector<std::string> target_sentences;
};

enum class CorpusFormat { jsonl, tsv };

struct CorpusLoadResult {
  std::vector<Document> documents;
  std::size_t skipped = 0;
};

/// Loads a corpus. JSONL records carry "source" and "target" strings; TSV
/// lines are `source<TAB>target`. The target is segmented with
/// split_sentences(). Malformed records are skipped with a warning and
/// counted. Throws DataError if the file cannot be read.
CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Splits after runs of terminal punctuation (. ! ? and 。！？). Pieces are
/// whitespace-trimmed; empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Lowercased word tokens; every punctuation code point is its own token.
std::vector<std::string> tokenize(std::string_view text);

/// True for tokens made only of punctuation.
bool is_punctuation_token(std::string_view token);

/// All sentences of a document in reading order: [source, y1, ..., yn].
std::vector<std::string> document_sentences(const Document& doc);

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kSep = 2;
  static constexpr std::int32_t kBos = 3;
  static constexpr std::int32_t kEos = 4;
  static constexpr std::int32_t kNumSpecials = 5;

  Vocabulary();

  /// Builds from ordered regular tokens (specials are prepended).
  explicit Vocabulary(std::vector<std::string> regular_tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Regular (non-special) tokens in id order.
  std::span<const std::string> regular_tokens() const;

  std::int32_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  bool is_special(std::int32_t id) const { return id >= 0 && id < kNumSpecials; }

  /// FNV-1a over the newline-joined token list.
  std::uint64_t hash() const;

  /// One regular token per line; line index = id - 5.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Keeps the `limit - 5` most frequent tokens (frequency descending, then
/// lexicographic). Requires limit > 5.
Vocabulary build_vocab(std::span<const Document> corpus, std::size_t limit);

/// Out-of-vocabulary tokens map to UNK.
std::vector<std::int32_t> encode(std::span<const std::string> tokens, const Vocabulary& vocab);

/// Throws std::out_of_range for ids outside [0, |vocab|).
std::vector<std::string> decode(std::span<const std::int32_t> ids, const Vocabulary& vocab);

}  // namespace mrg
