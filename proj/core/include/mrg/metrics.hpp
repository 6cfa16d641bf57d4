#pragma once

// Automatic evaluation: generated-word count, distinct n-grams, n-gram
// Jaccard novelty against training sentences, and corpus BLEU-4.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mrg {

using TokenSeq = std::vector<std::string>;

/// Number of distinct n-grams pooled over all texts. Throws for n == 0.
std::size_t distinct_ngrams(std::span<const TokenSeq> texts, std::size_t n);

/// Sum over texts of max(0, len - n + 1).
std::size_t total_ngrams(std::span<const TokenSeq> texts, std::size_t n);

/// Mean over generated sentences of the best set-Jaccard against any
/// training sentence. Sentences without n-grams score 0. Throws for an
/// empty generated or training list.
double jaccard_novelty(std::span<const TokenSeq> generated, std::span<const TokenSeq> training, std::size_t n);

/// Corpus BLEU-4, uniform weights, brevity penalty. A zero match count for
/// n >= 2 is smoothed to 1 / (candidate n-grams + 1). Throws on empty or
/// unequal-length inputs.
double bleu4(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references);

struct EvalReport {
  std::size_t token_count = 0;
  std::array<std::size_t, 3> dist{};  // n = 1, 2, 3
  std::array<double, 3> jaccard{};    // n = 1, 2, 3
  double bleu4 = 0.0;

  /// Fields as JSON; reals printed with 4 decimal places.
  std::string to_json() const;
  std::string to_text() const;
};

/// `generated` holds whole texts (scored for Token, Dist and BLEU);
/// novelty splits each into sentences.
EvalReport evaluate_texts(std::span<const std::string> generated, std::span<const std::string> training_sentences,
                          std::span<const std::string> references);

/// Generated file: generation JSONL (a "sentences" array per line) or corpus
/// JSONL (a "target" string per line). Training and references are corpus
/// files (.tsv read as TSV, anything else as JSONL); the reference for line
/// i is document i's target. Throws DataError on unreadable or empty input.
EvalReport evaluate(const std::filesystem::path& generated_path, const std::filesystem::path& training_path,
                    const std::filesystem::path& references_path);

}  // namespace mrg
