#include "mrg/labeller.hpp"

#include <stdexcept>

#include "minibatch.hpp"
#include "mrg/nn/transformer.hpp"

namespace mrg {

HopInput assemble_hop_input(std::span<const std::int32_t> context_ids, std::span<const std::string> candidates,
                            const Vocabulary& vocab) {
  if (candidates.empty()) throw std::invalid_argument("assemble_hop_input: no candidates");
  HopInput in;
  in.ids.assign(context_ids.begin(), context_ids.end());
  in.ids.push_back(Vocabulary::kSep);
  for (const auto& c : candidates) {
    in.candidate_positions.push_back(in.ids.size());
    in.ids.push_back(vocab.id(c));
  }
  return in;
}

ConceptLabel argmax_label(const LabelProbabilities& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<ConceptLabel>(best);
}

std::vector<CandidateScore> label_candidates(const HopInput& input, const nn::ParameterStore<float>& params) {
  const auto hidden = nn::encode_sequence<float>(input.ids, params, true);
  const auto probs = nn::classify_positions<float>(hidden, params);
  std::vector<CandidateScore> out;
  out.reserve(input.candidate_positions.size());
  for (auto pos : input.candidate_positions) {
    CandidateScore s;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      s.probabilities[k] = probs(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(k));
    }
    s.label = argmax_label(s.probabilities);
    out.push_back(s);
  }
  return out;
}

NeuralLabeller::NeuralLabeller(nn::ParameterStore<float> params, Vocabulary vocab, std::uint64_t trained_steps)
    : params_(std::move(params)), vocab_(std::move(vocab)) {
  if (trained_steps == 0) throw std::invalid_argument("labeller parameters are untrained");
  if (!params_.dims().classifier) throw std::invalid_argument("labeller checkpoint has no classifier head");
  if (static_cast<std::size_t>(params_.dims().vocab_size) != vocab_.size()) {
    throw std::invalid_argument("labeller vocabulary size mismatch");
  }
}

std::vector<CandidateScore> NeuralLabeller::label(std::span<const std::string> context_tokens,
                                                  std::span<const std::string> candidates, std::size_t) const {
  const auto context_ids = encode(context_tokens, vocab_);
  return label_candidates(assemble_hop_input(context_ids, candidates, vocab_), params_);
}

LabellerSample make_labeller_sample(const LabellingExample& example, const Vocabulary& vocab) {
  const auto in = assemble_hop_input(example.context_ids, example.candidates, vocab);
  LabellerSample s;
  s.ids = in.ids;
  s.gold.assign(in.ids.size(), 0);
  s.mask.assign(in.ids.size(), 0);
  for (std::size_t i = 0; i < in.candidate_positions.size(); ++i) {
    s.gold[in.candidate_positions[i]] = static_cast<std::int32_t>(example.labels[i]);
    s.mask[in.candidate_positions[i]] = 1;
  }
  return s;
}

TrainLog train_labeller(std::span<const LabellingExample> dataset, const Vocabulary& vocab,
                        nn::ParameterStore<float>& params, nn::AdamState<float>& adam, const TrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("labeller dataset is empty");
  std::vector<LabellerSample> samples;
  samples.reserve(dataset.size());
  for (const auto& ex : dataset) samples.push_back(make_labeller_sample(ex, vocab));
  return detail::minibatch_train(
      samples.size(), options, params, adam, [&](std::size_t i) { return dataset[i].candidates.size(); },
      [&](nn::Tape<float>& tape, std::size_t i, float weight) {
        const auto& s = samples[i];
        auto logits = nn::classifier_logits(tape, nn::encode_sequence(tape, std::span<const std::int32_t>(s.ids), true));
        return tape.masked_cross_entropy(logits, s.gold, s.mask, weight);
      });
}

double labeller_accuracy(std::span<const LabellingExample> dataset, const Vocabulary& vocab,
                         const nn::ParameterStore<float>& params) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& ex : dataset) {
    const auto scores = label_candidates(assemble_hop_input(ex.context_ids, ex.candidates, vocab), params);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      correct += scores[i].label == ex.labels[i] ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace mrg
