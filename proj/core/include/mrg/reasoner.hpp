#pragma once

// Multi-hop reasoning: starting from the context's concepts, repeatedly label
// the frontier neighbors of every alive path and extend, close or drop it.

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mrg/data_builder.hpp"
#include "mrg/graph.hpp"
#include "mrg/labeller.hpp"

namespace mrg {

struct ReasonerConfig {
  std::size_t max_hops = 3;
  std::size_t neighbor_cap = 20;
  std::size_t max_paths = 16;
  bool fallback = false;
  StopwordSet stopwords = default_stopwords();

  void validate() const;
};

enum class PathStatus { alive, closed_target, closed_dead };

struct FrontierPath {
  std::vector<std::string> nodes;
  PathStatus status = PathStatus::alive;
  std::unordered_set<std::string> visited;
  std::vector<LabelProbabilities> hop_probabilities;  // one per node after the start
};

/// One alive single-node path per matched context concept, first
/// occurrence order, at most max_paths.
std::vector<FrontierPath> seed_frontier(std::span<const std::string> context_tokens, const ConceptGraph& graph,
                                        const ReasonerConfig& config);

struct InferredPath {
  LabeledPath path;
  std::vector<LabelProbabilities> hop_probabilities;
  bool promoted = false;  // produced by the no-target fallback
};

struct ReasoningTrace {
  std::size_t rounds = 0;
  std::vector<std::size_t> alive_per_round;      // alive paths entering each round
  std::vector<std::size_t> labelings_per_round;  // candidates scored in each round
  std::size_t dead_paths = 0;
};

struct InferenceResult {
  std::vector<InferredPath> paths;   // all end in a Target
  std::vector<std::string> targets;  // distinct end concepts, first occurrence order
  ReasoningTrace trace;
};

InferenceResult infer_paths(std::span<const std::string> context_tokens, const ConceptGraph& graph,
                            const CandidateLabeller& labeller, const ReasonerConfig& config);

/// JSON array of {nodes, labels, probabilities, promoted}.
std::string inferred_paths_json(std::span<const InferredPath> paths);

}  // namespace mrg
