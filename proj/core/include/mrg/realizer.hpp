#pragma once

// Sentence realization from inferred skeleton paths: every target concept
// becomes one summed node representation, the set is encoded without
// positions and a decoder greedily emits the sentence.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mrg/corpus.hpp"
#include "mrg/data_builder.hpp"
#include "mrg/graph.hpp"
#include "mrg/nn/adam.hpp"
#include "mrg/nn/params.hpp"
#include "mrg/training.hpp"

namespace mrg {

inline constexpr std::size_t kDefaultMaxSentenceLength = 40;

struct SubGraphTarget {
  std::string target;
  std::vector<std::string> features;  // path nodes leading here first, then graph neighbors
};

struct PathSubGraph {
  std::vector<SubGraphTarget> targets;
};

/// One entry per distinct path end (first occurrence order). Throws
/// std::invalid_argument for an empty path list.
PathSubGraph build_subgraph(std::span<const LabeledPath> paths, const ConceptGraph& graph, std::size_t feature_cap);

/// Token ids per target: target first, then its features. Unknown words map to UNK.
std::vector<std::vector<std::int32_t>> subgraph_bags(const PathSubGraph& subgraph, const Vocabulary& vocab);

/// Raw embedding sums e(target) + sum of e(feature), one row per target.
nn::Matrix<float> node_representations(const PathSubGraph& subgraph, const Vocabulary& vocab,
                                       const nn::ParameterStore<float>& params);

/// Encoder memory over node representations; positions are never added.
template <class T>
nn::Matrix<T> encode_paths(const nn::Matrix<T>& representations, const nn::ParameterStore<T>& params);

/// Greedy decoding loop over an arbitrary next-token distribution. PAD, SEP
/// and BOS are never chosen, ties go to the lowest id, EOS ends the sentence
/// and is not returned.
using NextDistribution = std::function<nn::RowVector<float>(std::span<const std::int32_t> prefix)>;
std::vector<std::int32_t> greedy_decode(const NextDistribution& next, std::size_t max_len);

std::vector<std::int32_t> realize_sentence(const nn::Matrix<float>& memory, const nn::ParameterStore<float>& params,
                                           std::size_t max_len = kDefaultMaxSentenceLength);

/// Anything that turns target-ending paths into a tokenized sentence.
class SentenceRealizer {
 public:
  virtual ~SentenceRealizer() = default;
  virtual std::vector<std::string> realize(std::span<const LabeledPath> paths) const = 0;
};

class NeuralRealizer final : public SentenceRealizer {
 public:
  /// Throws std::invalid_argument for untrained parameters or a missing decoder.
  NeuralRealizer(nn::ParameterStore<float> params, Vocabulary vocab, const ConceptGraph& graph,
                 std::uint64_t trained_steps, std::size_t feature_cap = 20,
                 std::size_t max_len = kDefaultMaxSentenceLength);

  std::vector<std::string> realize(std::span<const LabeledPath> paths) const override;

 private:
  nn::ParameterStore<float> params_;
  Vocabulary vocab_;
  const ConceptGraph* graph_;
  std::size_t feature_cap_;
  std::size_t max_len_;
};

/// Teacher-forced decoder inputs and gold outputs for one example.
struct RealizerSample {
  std::vector<std::vector<std::int32_t>> bags;
  std::vector<std::int32_t> inputs;  // BOS w1 .. wn
  std::vector<std::int32_t> gold;    // w1 .. wn EOS
};

RealizerSample make_realizer_sample(const RealizationExample& example, const ConceptGraph& graph,
                                    const Vocabulary& vocab, std::size_t feature_cap = 20);

TrainLog train_realizer(std::span<const RealizationExample> dataset, const ConceptGraph& graph,
                        const Vocabulary& vocab, nn::ParameterStore<float>& params, nn::AdamState<float>& adam,
                        const TrainOptions& options, std::size_t feature_cap = 20);

/// Fraction of gold tokens predicted by the teacher-forced argmax.
double realizer_token_accuracy(std::span<const RealizationExample> dataset, const ConceptGraph& graph,
                               const Vocabulary& vocab, const nn::ParameterStore<float>& params,
                               std::size_t feature_cap = 20);

}  // namespace mrg
