#include "mrg/generator.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace mrg {

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::max_sentences:
      return "max_sentences";
    case StopReason::empty_frontier:
      return "empty_frontier";
    case StopReason::no_target:
      return "no_target";
  }
  return "unknown";
}

std::vector<std::string> GenerationState::sentence_texts() const {
  std::vector<std::string> out;
  out.reserve(generated_sentences.size());
  for (const auto& s : generated_sentences) {
    std::string text;
    for (const auto& tok : s) {
      if (!text.empty()) text += ' ';
      text += tok;
    }
    out.push_back(std::move(text));
  }
  return out;
}

std::vector<std::string> context_window(const std::vector<std::vector<std::string>>& history, std::size_t window) {
  std::vector<std::string> out;
  const std::size_t first = history.size() > window ? history.size() - window : 0;
  for (std::size_t i = first; i < history.size(); ++i) out.insert(out.end(), history[i].begin(), history[i].end());
  return out;
}

GenerationState generate(std::string_view source, const ConceptGraph& graph, const CandidateLabeller& labeller,
                         const SentenceRealizer& realizer, const GeneratorConfig& config) {
  if (config.window == 0) throw std::invalid_argument("generator window must be >= 1");
  GenerationState state;
  state.source = std::string(source);
  state.source_tokens = tokenize(source);

  // The source is one context unit, matching how training pairs are formed.
  std::vector<std::vector<std::string>> history{state.source_tokens};

  for (std::size_t j = 0; j < config.max_sentences; ++j) {
    auto context = context_window(history, config.window);
    if (seed_frontier(context, graph, config.reasoner).empty()) {
      state.stop_reason = StopReason::empty_frontier;
      return state;
    }
    auto inferred = infer_paths(context, graph, labeller, config.reasoner);
    if (inferred.paths.empty()) {
      state.stop_reason = StopReason::no_target;
      return state;
    }
    std::vector<LabeledPath> paths;
    paths.reserve(inferred.paths.size());
    for (const auto& p : inferred.paths) paths.push_back(p.path);
    auto sentence = realizer.realize(paths);
    history.push_back(sentence);
    state.generated_sentences.push_back(std::move(sentence));
    state.per_sentence_paths.push_back(std::move(inferred.paths));
    state.contexts.push_back(std::move(context));
  }
  state.stop_reason = StopReason::max_sentences;
  return state;
}

std::string generation_to_json(const GenerationState& state) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& ps : state.per_sentence_paths) paths.push_back(nlohmann::json::parse(inferred_paths_json(ps)));
  nlohmann::json j = {{"source", state.source},
                      {"sentences", state.sentence_texts()},
                      {"paths", paths},
                      {"stop_reason", std::string(stop_reason_name(state.stop_reason))}};
  return j.dump();
}

}  // namespace mrg
