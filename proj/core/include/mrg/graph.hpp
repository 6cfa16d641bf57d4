#pragma once

// Concept graphs: the PMI-based self-constructed graph, imported triple
// graphs, and capped loop-aware neighbor queries.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mrg/corpus.hpp"

namespace mrg {

using StopwordSet = std::unordered_set<std::string>;

/// The bundled English stopword list.
const StopwordSet& default_stopwords();

/// One word per line; blank lines and lines starting with '#' are ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  friend bool operator==(const Triple&, const Triple&) = default;
};

enum class GraphOrigin { self_constructed, imported };

struct GraphConfig {
  std::size_t top_k = 20;
  std::size_t neighbor_cap = 20;
  StopwordSet stopwords = default_stopwords();
};

/// Document-level co-occurrence statistics over vocabulary ids.
class CooccurrenceCounts {
 public:
  std::size_t doc_count = 0;
  std::unordered_map<std::int32_t, std::size_t> word_doc_freq;

  std::size_t word_freq(std::int32_t w) const;
  std::size_t pair_freq(std::int32_t a, std::int32_t b) const;
  void add_pair(std::int32_t a, std::int32_t b, std::size_t count = 1);

  /// Partners of `w` with a nonzero pair count, ascending id.
  std::vector<std::int32_t> partners(std::int32_t w) const;

  /// Order-independent merge (sums every counter).
  void merge(const CooccurrenceCounts& other);

  const std::unordered_map<std::uint64_t, std::size_t>& pairs() const { return pair_doc_freq_; }

  static std::uint64_t pair_key(std::int32_t a, std::int32_t b);

 private:
  std::unordered_map<std::uint64_t, std::size_t> pair_doc_freq_;
  std::unordered_map<std::int32_t, std::vector<std::int32_t>> partners_;
};

/// Counts each word and unordered word pair once per document, over the
/// source and every target sentence. Stopwords, punctuation tokens and
/// out-of-vocabulary words are ignored.
CooccurrenceCounts count_cooccurrence(std::span<const Document> corpus, const Vocabulary& vocab,
                                      const StopwordSet& stopwords);

/// Natural-log PMI with document-frequency probabilities. Returns nullopt
/// when the pair never co-occurs. Throws std::invalid_argument if either
/// word is absent from the counts.
std::optional<double> pmi(std::int32_t wi, std::int32_t wj, const CooccurrenceCounts& counts);
std::optional<double> pmi(std::string_view wi, std::string_view wj, const CooccurrenceCounts& counts,
                          const Vocabulary& vocab);

class ConceptGraph {
 public:
  struct Edge {
    std::int32_t neighbor;
    std::string relation;
  };

  ConceptGraph() = default;

  /// Builds adjacency from an ordered triple list: first every head gets
  /// its tails in triple order, then every tail gets its heads. Duplicate
  /// triples and self-loops are dropped. `extra_nodes` adds isolated nodes.
  static ConceptGraph from_triples(std::span<const Triple> triples, GraphOrigin origin,
                                   std::span<const std::string> extra_nodes = {});

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t triple_count() const { return triples_.size(); }
  GraphOrigin origin() const { return origin_; }

  bool contains(std::string_view concept_name) const;
  std::int32_t node_id(std::string_view concept_name) const;  // -1 when absent
  const std::string& node_name(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& adjacency(std::int32_t id) const { return adjacency_[static_cast<std::size_t>(id)]; }
  const std::vector<Triple>& triples() const { return triples_; }

  /// Nodes that appear in no triple.
  std::vector<std::string> isolated_nodes() const;

  /// `head<TAB>relation<TAB>tail` per line, in stored order.
  std::string to_tsv() const;

 private:
  std::int32_t intern(const std::string& name);

  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<Triple> triples_;
  GraphOrigin origin_ = GraphOrigin::imported;
};

/// For every non-stopword, non-punctuation vocabulary word, emits directed
/// "pmi" triples to its top_k highest-PMI co-occurring partners (ties go to
/// the lexicographically smaller partner). Heads follow vocabulary order.
ConceptGraph build_self_graph(std::span<const Document> corpus, const Vocabulary& vocab,
                              const GraphConfig& config);

/// Same, from precomputed counts.
ConceptGraph build_self_graph(const CooccurrenceCounts& counts, const Vocabulary& vocab,
                              const GraphConfig& config);

struct ImportResult {
  ConceptGraph graph;
  std::size_t skipped = 0;
};

/// Reads `head<TAB>relation<TAB>tail` lines. Malformed lines are skipped
/// with a warning. Throws DataError if unreadable.
ImportResult import_triples(const std::filesystem::path& path,
                            GraphOrigin origin = GraphOrigin::imported);
ImportResult parse_triples(std::string_view tsv, GraphOrigin origin = GraphOrigin::imported);

/// First `cap` adjacent concepts in stored order, skipping anything in
/// `visited`. Throws std::out_of_range for an unknown concept.
std::vector<std::string> neighbors(const ConceptGraph& graph, std::string_view concept_name,
                                   std::size_t cap, const std::unordered_set<std::string>& visited = {});

/// Graph nodes among `tokens`, first-occurrence order, deduplicated,
/// stopwords excluded.
std::vector<std::string> match_concepts(std::span<const std::string> tokens, const ConceptGraph& graph,
                                        const StopwordSet& stopwords = default_stopwords());

/// Sidecar metadata written next to an exported graph.
struct GraphMetadata {
  GraphOrigin origin = GraphOrigin::imported;
  std::size_t top_k = 0;
  std::string vocab_hash;
  std::size_t doc_count = 0;
  std::vector<std::string> isolated_nodes;
};

/// Writes `path` (TSV) and `path.meta.json`.
void save_graph(const ConceptGraph& graph, const GraphMetadata& meta, const std::filesystem::path& path,
                const std::string& extra_meta_json = "{}");

/// Loads a TSV graph and, if present, its sidecar metadata.
ConceptGraph load_graph(const std::filesystem::path& path);

std::filesystem::path graph_meta_path(const std::filesystem::path& graph_path);

}  // namespace mrg
