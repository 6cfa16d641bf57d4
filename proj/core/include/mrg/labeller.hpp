#pragma once

// The hop labeller: a transformer encoder over `context [SEP] candidates`
// with a 3-way classifier on the candidate positions.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mrg/corpus.hpp"
#include "mrg/data_builder.hpp"
#include "mrg/nn/adam.hpp"
#include "mrg/nn/params.hpp"
#include "mrg/training.hpp"

namespace mrg {

/// Token ids `context SEP candidates` and the positions of the candidates.
struct HopInput {
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> candidate_positions;
};

HopInput assemble_hop_input(std::span<const std::int32_t> context_ids, std::span<const std::string> candidates,
                            const Vocabulary& vocab);

using LabelProbabilities = std::array<double, kNumLabels>;

struct CandidateScore {
  ConceptLabel label = ConceptLabel::other;
  LabelProbabilities probabilities{};
};

/// Argmax; exact ties resolve toward Other, then Intermediate.
ConceptLabel argmax_label(const LabelProbabilities& probs);

/// Anything that can label a hop's frontier candidates.
class CandidateLabeller {
 public:
  virtual ~CandidateLabeller() = default;
  virtual std::vector<CandidateScore> label(std::span<const std::string> context_tokens,
                                            std::span<const std::string> candidates, std::size_t hop) const = 0;
};

/// Runs the encoder and classifier; returns one score per candidate.
std::vector<CandidateScore> label_candidates(const HopInput& input, const nn::ParameterStore<float>& params);

class NeuralLabeller final : public CandidateLabeller {
 public:
  /// Throws std::invalid_argument for parameters that were never trained.
  NeuralLabeller(nn::ParameterStore<float> params, Vocabulary vocab, std::uint64_t trained_steps);

  std::vector<CandidateScore> label(std::span<const std::string> context_tokens,
                                    std::span<const std::string> candidates, std::size_t hop) const override;

  const Vocabulary& vocab() const { return vocab_; }

 private:
  nn::ParameterStore<float> params_;
  Vocabulary vocab_;
};

/// Training view of one example: ids, per-position gold label and a mask that
/// is 1 only on candidate positions.
struct LabellerSample {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> gold;
  std::vector<std::uint8_t> mask;
};

LabellerSample make_labeller_sample(const LabellingExample& example, const Vocabulary& vocab);

/// Mini-batch Adam on masked cross-entropy. Deterministic for a fixed seed.
TrainLog train_labeller(std::span<const LabellingExample> dataset, const Vocabulary& vocab,
                        nn::ParameterStore<float>& params, nn::AdamState<float>& adam, const TrainOptions& options);

/// Fraction of candidates whose argmax label equals the gold label.
double labeller_accuracy(std::span<const LabellingExample> dataset, const Vocabulary& vocab,
                         const nn::ParameterStore<float>& params);

}  // namespace mrg
