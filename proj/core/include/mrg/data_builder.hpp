#pragma once

// Self-supervised pseudo-parallel data: hop-wise labelling examples and
// path-to-sentence realization examples built from consecutive sentences.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrg/corpus.hpp"
#include "mrg/graph.hpp"

namespace mrg {

/// Candidate labels. The numeric order is also the argmax tie order.
enum class ConceptLabel : std::uint8_t { other = 0, intermediate = 1, target = 2 };

inline constexpr std::size_t kNumLabels = 3;

std::string_view label_name(ConceptLabel label);
ConceptLabel parse_label(std::string_view name);

/// A loop-free concept chain. The last node is the Target; every earlier
/// node (including the start) is Intermediate.
struct LabeledPath {
  std::vector<std::string> nodes;
  std::vector<ConceptLabel> labels;

  static LabeledPath from_nodes(std::vector<std::string> nodes);

  const std::string& start() const { return nodes.front(); }
  const std::string& end() const { return nodes.back(); }
  std::size_t hops() const { return nodes.size() - 1; }

  friend bool operator==(const LabeledPath&, const LabeledPath&) = default;
};

/// Checks the LabeledPath invariants; returns an empty string when valid.
std::string validate_path(const LabeledPath& path, std::size_t max_hops);

struct LabellingExample {
  std::vector<std::int32_t> context_ids;
  std::vector<std::string> candidates;
  std::vector<ConceptLabel> labels;
  std::size_t hop = 1;

  friend bool operator==(const LabellingExample&, const LabellingExample&) = default;
};

struct RealizationExample {
  std::vector<LabeledPath> paths;
  std::vector<std::int32_t> target_ids;  // BOS ... EOS

  friend bool operator==(const RealizationExample&, const RealizationExample&) = default;
};

struct DataConfig {
  std::size_t max_hops = 3;
  std::size_t neighbor_cap = 20;
  StopwordSet stopwords = default_stopwords();
};

/// Consecutive pairs over [source, y1, ..., yn].
std::vector<std::pair<std::string, std::string>> sentence_pairs(const Document& doc);

/// Level-by-level expansion of simple paths from every former concept.
/// Each node contributes at most `neighbor_cap` unvisited neighbors. A path
/// ends as soon as it reaches a latter concept; for each (start, end) pair
/// only the shortest path survives, ties broken by lexicographic node
/// sequence. Output is ordered by start (former order), then hop count,
/// then node sequence.
std::vector<LabeledPath> find_labeled_paths(std::span<const std::string> former_concepts,
                                            std::span<const std::string> latter_concepts,
                                            const ConceptGraph& graph, std::size_t max_hops,
                                            std::size_t neighbor_cap = 20);

/// Labelling examples for one sentence pair given its labeled paths.
std::vector<LabellingExample> labelling_examples_for_pair(std::span<const std::int32_t> context_ids,
                                                          std::span<const LabeledPath> paths,
                                                          const ConceptGraph& graph, std::size_t neighbor_cap);

struct PairPaths {
  std::string former;
  std::string latter;
  std::vector<LabeledPath> paths;
};

/// Labeled paths for every sentence pair of every document, corpus order.
std::vector<PairPaths> collect_pair_paths(std::span<const Document> corpus, const ConceptGraph& graph,
                                          const DataConfig& config);

std::vector<LabellingExample> build_labelling_dataset(std::span<const Document> corpus, const ConceptGraph& graph,
                                                      const Vocabulary& vocab, const DataConfig& config);

std::vector<RealizationExample> build_realization_dataset(std::span<const Document> corpus,
                                                          const ConceptGraph& graph, const Vocabulary& vocab,
                                                          const DataConfig& config);

// JSONL (de)serialization. One record per line, no trailing metadata.
std::string labelling_to_jsonl(std::span<const LabellingExample> examples);
std::vector<LabellingExample> labelling_from_jsonl(std::string_view text);
std::string realization_to_jsonl(std::span<const RealizationExample> examples);
std::vector<RealizationExample> realization_from_jsonl(std::string_view text);
std::string paths_to_json_string(std::span<const LabeledPath> paths);

}  // namespace mrg
