#include "mrg/reasoner.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>

namespace mrg {

namespace {

constexpr std::size_t kIntermediate = static_cast<std::size_t>(ConceptLabel::intermediate);
constexpr std::size_t kTarget = static_cast<std::size_t>(ConceptLabel::target);

InferredPath close_as_target(const FrontierPath& parent, const std::string& node, const LabelProbabilities& probs) {
  auto nodes = parent.nodes;
  nodes.push_back(node);
  InferredPath out;
  out.path = LabeledPath::from_nodes(std::move(nodes));
  out.hop_probabilities = parent.hop_probabilities;
  out.hop_probabilities.push_back(probs);
  return out;
}

}  // namespace

void ReasonerConfig::validate() const {
  if (max_hops < 1 || neighbor_cap < 1 || max_paths < 1) {
    throw std::invalid_argument("reasoner counts must all be >= 1");
  }
}

std::vector<FrontierPath> seed_frontier(std::span<const std::string> context_tokens, const ConceptGraph& graph,
                                        const ReasonerConfig& config) {
  std::vector<FrontierPath> out;
  for (auto& c : match_concepts(context_tokens, graph, config.stopwords)) {
    if (out.size() >= config.max_paths) break;
    FrontierPath p;
    p.visited.insert(c);
    p.nodes.push_back(std::move(c));
    out.push_back(std::move(p));
  }
  return out;
}

InferenceResult infer_paths(std::span<const std::string> context_tokens, const ConceptGraph& graph,
                            const CandidateLabeller& labeller, const ReasonerConfig& config) {
  config.validate();
  InferenceResult result;
  auto alive = seed_frontier(context_tokens, graph, config);

  struct Best {
    double target_probability = -1.0;
    FrontierPath parent;
    std::string node;
    LabelProbabilities probabilities{};
  };
  std::optional<Best> best;

  for (std::size_t hop = 1; hop <= config.max_hops && !alive.empty(); ++hop) {
    ++result.trace.rounds;
    result.trace.alive_per_round.push_back(alive.size());
    std::size_t labelings = 0;

    struct Branch {
      std::size_t parent;
      std::string node;
      LabelProbabilities probabilities;
    };
    std::vector<Branch> branches;

    for (std::size_t pi = 0; pi < alive.size(); ++pi) {
      auto& path = alive[pi];
      const auto candidates = neighbors(graph, path.nodes.back(), config.neighbor_cap, path.visited);
      if (candidates.empty()) {
        path.status = PathStatus::closed_dead;
        ++result.trace.dead_paths;
        continue;
      }
      const auto scores = labeller.label(context_tokens, candidates, hop);
      if (scores.size() != candidates.size()) throw std::logic_error("labeller returned the wrong number of scores");
      labelings += candidates.size();
      bool extended = false;
      bool reached_target = false;
      for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const auto& s = scores[ci];
        if (!best || s.probabilities[kTarget] > best->target_probability) {
          best = Best{s.probabilities[kTarget], path, candidates[ci], s.probabilities};
        }
        if (s.label == ConceptLabel::target) {
          result.paths.push_back(close_as_target(path, candidates[ci], s.probabilities));
          extended = reached_target = true;
        } else if (s.label == ConceptLabel::intermediate) {
          branches.push_back({pi, candidates[ci], s.probabilities});
          extended = true;
        }
      }
      // Branching copies the path; the parent itself is alive only through its children.
      path.status = reached_target ? PathStatus::closed_target : extended ? PathStatus::alive : PathStatus::closed_dead;
      if (!extended) ++result.trace.dead_paths;
    }
    result.trace.labelings_per_round.push_back(labelings);

    std::stable_sort(branches.begin(), branches.end(), [](const Branch& a, const Branch& b) {
      return a.probabilities[kIntermediate] > b.probabilities[kIntermediate];
    });
    if (branches.size() > config.max_paths) branches.resize(config.max_paths);

    std::vector<FrontierPath> next;
    next.reserve(branches.size());
    for (auto& b : branches) {
      FrontierPath child = alive[b.parent];
      child.status = PathStatus::alive;
      child.visited.insert(b.node);
      child.nodes.push_back(std::move(b.node));
      child.hop_probabilities.push_back(b.probabilities);
      next.push_back(std::move(child));
    }
    alive = std::move(next);
  }
  // Anything still alive after the last round dies.
  result.trace.dead_paths += alive.size();

  if (result.paths.empty() && config.fallback && best) {
    auto promoted = close_as_target(best->parent, best->node, best->probabilities);
    promoted.promoted = true;
    result.paths.push_back(std::move(promoted));
  }

  std::unordered_set<std::string> seen;
  for (const auto& p : result.paths) {
    if (seen.insert(p.path.end()).second) result.targets.push_back(p.path.end());
  }
  return result;
}

std::string inferred_paths_json(std::span<const InferredPath> paths) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : paths) {
    nlohmann::json labels = nlohmann::json::array();
    for (auto l : p.path.labels) labels.push_back(std::string(label_name(l)));
    nlohmann::json probs = nlohmann::json::array();
    for (const auto& pr : p.hop_probabilities) probs.push_back({pr[0], pr[1], pr[2]});
    arr.push_back({{"nodes", p.path.nodes}, {"labels", labels}, {"probabilities", probs}, {"promoted", p.promoted}});
  }
  return arr.dump();
}

}  // namespace mrg
