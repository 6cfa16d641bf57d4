#include "mrg/realizer.hpp"

#include <stdexcept>
#include <unordered_set>

#include "minibatch.hpp"
#include "mrg/nn/transformer.hpp"

namespace mrg {

PathSubGraph build_subgraph(std::span<const LabeledPath> paths, const ConceptGraph& graph, std::size_t feature_cap) {
  if (paths.empty()) throw std::invalid_argument("build_subgraph: no paths");
  PathSubGraph sg;
  std::vector<std::unordered_set<std::string>> seen;
  auto entry_for = [&](const std::string& target) -> std::size_t {
    for (std::size_t i = 0; i < sg.targets.size(); ++i) {
      if (sg.targets[i].target == target) return i;
    }
    sg.targets.push_back({target, {}});
    seen.push_back({target});
    return sg.targets.size() - 1;
  };
  for (const auto& p : paths) {
    if (p.nodes.empty()) throw std::invalid_argument("build_subgraph: empty path");
    const auto idx = entry_for(p.end());
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
      if (seen[idx].insert(p.nodes[i]).second) sg.targets[idx].features.push_back(p.nodes[i]);
    }
  }
  for (std::size_t idx = 0; idx < sg.targets.size(); ++idx) {
    auto& t = sg.targets[idx];
    if (!graph.contains(t.target)) continue;
    for (auto& n : neighbors(graph, t.target, feature_cap)) {
      if (seen[idx].insert(n).second) t.features.push_back(std::move(n));
    }
  }
  return sg;
}

std::vector<std::vector<std::int32_t>> subgraph_bags(const PathSubGraph& subgraph, const Vocabulary& vocab) {
  std::vector<std::vector<std::int32_t>> bags;
  bags.reserve(subgraph.targets.size());
  for (const auto& t : subgraph.targets) {
    std::vector<std::int32_t> bag{vocab.id(t.target)};
    for (const auto& f : t.features) bag.push_back(vocab.id(f));
    bags.push_back(std::move(bag));
  }
  return bags;
}

nn::Matrix<float> node_representations(const PathSubGraph& subgraph, const Vocabulary& vocab,
                                       const nn::ParameterStore<float>& params) {
  const auto& table = params.at("embed.tokens");
  const auto bags = subgraph_bags(subgraph, vocab);
  nn::Matrix<float> out = nn::Matrix<float>::Zero(static_cast<Eigen::Index>(bags.size()), table.cols());
  for (std::size_t i = 0; i < bags.size(); ++i) {
    for (auto id : bags[i]) out.row(static_cast<Eigen::Index>(i)) += table.row(id);
  }
  return out;
}

template <class T>
nn::Matrix<T> encode_paths(const nn::Matrix<T>& representations, const nn::ParameterStore<T>& params) {
  nn::Tape<T> tape(params, nullptr);
  return tape.value(nn::encode_rows(tape, representations));
}

template nn::Matrix<float> encode_paths(const nn::Matrix<float>&, const nn::ParameterStore<float>&);
template nn::Matrix<double> encode_paths(const nn::Matrix<double>&, const nn::ParameterStore<double>&);

std::vector<std::int32_t> greedy_decode(const NextDistribution& next, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  std::vector<std::int32_t> prefix{Vocabulary::kBos};
  std::vector<std::int32_t> out;
  while (out.size() < max_len) {
    const auto dist = next(prefix);
    std::int32_t best = -1;
    for (Eigen::Index i = 0; i < dist.size(); ++i) {
      const auto id = static_cast<std::int32_t>(i);
      if (id == Vocabulary::kPad || id == Vocabulary::kSep || id == Vocabulary::kBos) continue;
      if (best < 0 || dist(i) > dist(best)) best = id;
    }
    if (best < 0 || best == Vocabulary::kEos) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

std::vector<std::int32_t> realize_sentence(const nn::Matrix<float>& memory, const nn::ParameterStore<float>& params,
                                           std::size_t max_len) {
  if (memory.rows() == 0) throw std::invalid_argument("realize_sentence: empty memory");
  return greedy_decode(
      [&](std::span<const std::int32_t> prefix) { return nn::decode_step<float>(prefix, memory, params); }, max_len);
}

NeuralRealizer::NeuralRealizer(nn::ParameterStore<float> params, Vocabulary vocab, const ConceptGraph& graph,
                               std::uint64_t trained_steps, std::size_t feature_cap, std::size_t max_len)
    : params_(std::move(params)), vocab_(std::move(vocab)), graph_(&graph), feature_cap_(feature_cap),
      max_len_(max_len) {
  if (trained_steps == 0) throw std::invalid_argument("realizer parameters are untrained");
  if (!params_.dims().decoder) throw std::invalid_argument("realizer checkpoint has no decoder");
  if (static_cast<std::size_t>(params_.dims().vocab_size) != vocab_.size()) {
    throw std::invalid_argument("realizer vocabulary size mismatch");
  }
}

std::vector<std::string> NeuralRealizer::realize(std::span<const LabeledPath> paths) const {
  const auto sg = build_subgraph(paths, *graph_, feature_cap_);
  const auto memory = encode_paths<float>(node_representations(sg, vocab_, params_), params_);
  return decode(realize_sentence(memory, params_, max_len_), vocab_);
}

RealizerSample make_realizer_sample(const RealizationExample& example, const ConceptGraph& graph,
                                    const Vocabulary& vocab, std::size_t feature_cap) {
  if (example.target_ids.size() < 2) throw std::invalid_argument("realization target needs BOS and EOS");
  RealizerSample s;
  s.bags = subgraph_bags(build_subgraph(example.paths, graph, feature_cap), vocab);
  s.inputs.assign(example.target_ids.begin(), example.target_ids.end() - 1);
  s.gold.assign(example.target_ids.begin() + 1, example.target_ids.end());
  return s;
}

TrainLog train_realizer(std::span<const RealizationExample> dataset, const ConceptGraph& graph,
                        const Vocabulary& vocab, nn::ParameterStore<float>& params, nn::AdamState<float>& adam,
                        const TrainOptions& options, std::size_t feature_cap) {
  if (dataset.empty()) throw std::invalid_argument("realizer dataset is empty");
  std::vector<RealizerSample> samples;
  samples.reserve(dataset.size());
  for (const auto& ex : dataset) samples.push_back(make_realizer_sample(ex, graph, vocab, feature_cap));
  return detail::minibatch_train(
      samples.size(), options, params, adam, [&](std::size_t i) { return samples[i].gold.size(); },
      [&](nn::Tape<float>& tape, std::size_t i, float weight) {
        const auto& s = samples[i];
        auto memory = nn::encode_bags(tape, s.bags);
        auto logits = nn::decoder_logits(tape, std::span<const std::int32_t>(s.inputs), memory);
        const std::vector<std::uint8_t> mask(s.gold.size(), 1);
        return tape.masked_cross_entropy(logits, s.gold, mask, weight);
      });
}

double realizer_token_accuracy(std::span<const RealizationExample> dataset, const ConceptGraph& graph,
                               const Vocabulary& vocab, const nn::ParameterStore<float>& params,
                               std::size_t feature_cap) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& ex : dataset) {
    const auto s = make_realizer_sample(ex, graph, vocab, feature_cap);
    nn::Tape<float> tape(params, nullptr);
    auto memory = nn::encode_bags(tape, s.bags);
    const auto& logits = tape.value(nn::decoder_logits(tape, std::span<const std::int32_t>(s.inputs), memory));
    for (std::size_t t = 0; t < s.gold.size(); ++t) {
      Eigen::Index best = 0;
      logits.row(static_cast<Eigen::Index>(t)).maxCoeff(&best);
      correct += best == s.gold[t] ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace mrg
