#include "mrg/data_builder.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "mrg/util.hpp"

namespace mrg {

using nlohmann::json;

std::string_view label_name(ConceptLabel label) {
  switch (label) {
    case ConceptLabel::other:
      return "other";
    case ConceptLabel::intermediate:
      return "intermediate";
    case ConceptLabel::target:
      return "target";
  }
  return "other";
}

ConceptLabel parse_label(std::string_view name) {
  if (name == "other") return ConceptLabel::other;
  if (name == "intermediate") return ConceptLabel::intermediate;
  if (name == "target") return ConceptLabel::target;
  throw DataError("unknown label: " + std::string(name));
}

LabeledPath LabeledPath::from_nodes(std::vector<std::string> nodes) {
  if (nodes.size() < 2) throw std::invalid_argument("a labeled path needs at least two nodes");
  LabeledPath p;
  p.labels.assign(nodes.size(), ConceptLabel::intermediate);
  p.labels.back() = ConceptLabel::target;
  p.nodes = std::move(nodes);
  return p;
}

std::string validate_path(const LabeledPath& path, std::size_t max_hops) {
  if (path.nodes.size() < 2) return "path has fewer than two nodes";
  if (path.labels.size() != path.nodes.size()) return "labels not parallel to nodes";
  if (path.nodes.size() > max_hops + 1) return "path longer than max_hops";
  std::unordered_set<std::string> seen;
  for (const auto& n : path.nodes) {
    if (!seen.insert(n).second) return "path revisits " + n;
  }
  for (std::size_t i = 0; i + 1 < path.labels.size(); ++i) {
    if (path.labels[i] != ConceptLabel::intermediate) return "non-terminal node not labeled intermediate";
  }
  if (path.labels.back() != ConceptLabel::target) return "terminal node not labeled target";
  return {};
}

std::vector<std::pair<std::string, std::string>> sentence_pairs(const Document& doc) {
  std::vector<std::pair<std::string, std::string>> out;
  if (doc.target_sentences.empty()) return out;
  const auto sentences = document_sentences(doc);
  for (std::size_t i = 0; i + 1 < sentences.size(); ++i) out.emplace_back(sentences[i], sentences[i + 1]);
  return out;
}

std::vector<LabeledPath> find_labeled_paths(std::span<const std::string> former_concepts,
                                            std::span<const std::string> latter_concepts,
                                            const ConceptGraph& graph, std::size_t max_hops,
                                            std::size_t neighbor_cap) {
  if (max_hops < 1) throw std::invalid_argument("max_hops must be >= 1");
  const std::unordered_set<std::string> latter(latter_concepts.begin(), latter_concepts.end());
  std::vector<LabeledPath> out;
  std::unordered_set<std::string> started;

  for (const auto& start : former_concepts) {
    if (!graph.contains(start) || !started.insert(start).second) continue;
    std::map<std::string, std::vector<std::string>> best;  // end -> shortest node sequence
    std::vector<std::vector<std::string>> frontier{{start}};
    for (std::size_t depth = 1; depth <= max_hops && !frontier.empty(); ++depth) {
      std::vector<std::vector<std::string>> next;
      std::set<std::string> reached_now;
      for (const auto& path : frontier) {
        const std::unordered_set<std::string> visited(path.begin(), path.end());
        for (auto& cand : neighbors(graph, path.back(), neighbor_cap, visited)) {
          auto extended = path;
          extended.push_back(cand);
          if (latter.count(cand)) {
            auto it = best.find(cand);
            if (it == best.end()) {
              best.emplace(cand, std::move(extended));
              reached_now.insert(cand);
            } else if (reached_now.count(cand) && extended < it->second) {
              it->second = std::move(extended);
            }
          } else if (depth < max_hops) {
            next.push_back(std::move(extended));
          }
        }
      }
      frontier = std::move(next);
    }
    std::vector<LabeledPath> mine;
    mine.reserve(best.size());
    for (auto& [end, nodes] : best) mine.push_back(LabeledPath::from_nodes(std::move(nodes)));
    std::sort(mine.begin(), mine.end(), [](const LabeledPath& a, const LabeledPath& b) {
      if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
      return a.nodes < b.nodes;
    });
    for (auto& p : mine) out.push_back(std::move(p));
  }
  return out;
}

std::vector<LabellingExample> labelling_examples_for_pair(std::span<const std::int32_t> context_ids,
                                                          std::span<const LabeledPath> paths,
                                                          const ConceptGraph& graph, std::size_t neighbor_cap) {
  std::unordered_set<std::string> targets;
  std::unordered_set<std::string> intermediates;
  for (const auto& p : paths) {
    targets.insert(p.end());
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) intermediates.insert(p.nodes[i]);
  }
  auto role = [&](const std::string& c) {
    if (targets.count(c)) return ConceptLabel::target;
    if (intermediates.count(c)) return ConceptLabel::intermediate;
    return ConceptLabel::other;
  };

  std::vector<LabellingExample> out;
  std::set<std::vector<std::string>> emitted_prefixes;
  for (const auto& p : paths) {
    for (std::size_t hop = 1; hop < p.nodes.size(); ++hop) {
      std::vector<std::string> prefix(p.nodes.begin(), p.nodes.begin() + static_cast<std::ptrdiff_t>(hop));
      if (!emitted_prefixes.insert(prefix).second) continue;
      const std::unordered_set<std::string> visited(prefix.begin(), prefix.end());
      LabellingExample ex;
      ex.context_ids.assign(context_ids.begin(), context_ids.end());
      ex.candidates = neighbors(graph, prefix.back(), neighbor_cap, visited);
      ex.hop = hop;
      ex.labels.reserve(ex.candidates.size());
      for (const auto& c : ex.candidates) ex.labels.push_back(role(c));
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<PairPaths> collect_pair_paths(std::span<const Document> corpus, const ConceptGraph& graph,
                                          const DataConfig& config) {
  std::vector<PairPaths> out;
  for (const auto& doc : corpus) {
    for (auto& [former, latter] : sentence_pairs(doc)) {
      const auto former_concepts = match_concepts(tokenize(former), graph, config.stopwords);
      const auto latter_concepts = match_concepts(tokenize(latter), graph, config.stopwords);
      PairPaths pp;
      pp.paths = find_labeled_paths(former_concepts, latter_concepts, graph, config.max_hops, config.neighbor_cap);
      pp.former = std::move(former);
      pp.latter = std::move(latter);
      out.push_back(std::move(pp));
    }
  }
  return out;
}

std::vector<LabellingExample> build_labelling_dataset(std::span<const Document> corpus, const ConceptGraph& graph,
                                                      const Vocabulary& vocab, const DataConfig& config) {
  std::vector<LabellingExample> out;
  for (const auto& pp : collect_pair_paths(corpus, graph, config)) {
    if (pp.paths.empty()) continue;
    const auto context_ids = encode(tokenize(pp.former), vocab);
    for (auto& ex : labelling_examples_for_pair(context_ids, pp.paths, graph, config.neighbor_cap)) {
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<RealizationExample> build_realization_dataset(std::span<const Document> corpus,
                                                          const ConceptGraph& graph, const Vocabulary& vocab,
                                                          const DataConfig& config) {
  std::vector<RealizationExample> out;
  for (auto& pp : collect_pair_paths(corpus, graph, config)) {
    if (pp.paths.empty()) continue;
    RealizationExample ex;
    ex.paths = std::move(pp.paths);
    ex.target_ids.push_back(Vocabulary::kBos);
    for (auto id : encode(tokenize(pp.latter), vocab)) ex.target_ids.push_back(id);
    ex.target_ids.push_back(Vocabulary::kEos);
    out.push_back(std::move(ex));
  }
  return out;
}

// --- JSONL ---

namespace {

json labels_json(std::span<const ConceptLabel> labels) {
  json arr = json::array();
  for (auto l : labels) arr.push_back(std::string(label_name(l)));
  return arr;
}

std::vector<ConceptLabel> labels_from(const json& arr) {
  std::vector<ConceptLabel> out;
  for (const auto& l : arr) out.push_back(parse_label(l.get<std::string>()));
  return out;
}

json path_json(const LabeledPath& p) { return json{{"nodes", p.nodes}, {"labels", labels_json(p.labels)}}; }

template <class F>
void for_each_json_line(std::string_view text, F&& f) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError("JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::string labelling_to_jsonl(std::span<const LabellingExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    json j{{"context_ids", ex.context_ids},
           {"candidates", ex.candidates},
           {"labels", labels_json(ex.labels)},
           {"hop", ex.hop}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LabellingExample> labelling_from_jsonl(std::string_view text) {
  std::vector<LabellingExample> out;
  for_each_json_line(text, [&](const json& j) {
    LabellingExample ex;
    ex.context_ids = j.at("context_ids").get<std::vector<std::int32_t>>();
    ex.candidates = j.at("candidates").get<std::vector<std::string>>();
    ex.labels = labels_from(j.at("labels"));
    ex.hop = j.at("hop").get<std::size_t>();
    if (ex.candidates.empty() || ex.labels.size() != ex.candidates.size()) {
      throw DataError("labelling record with empty or non-parallel candidates");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::string paths_to_json_string(std::span<const LabeledPath> paths) {
  json arr = json::array();
  for (const auto& p : paths) arr.push_back(path_json(p));
  return arr.dump();
}

std::string realization_to_jsonl(std::span<const RealizationExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    json paths = json::array();
    for (const auto& p : ex.paths) paths.push_back(path_json(p));
    out += json{{"paths", paths}, {"target_ids", ex.target_ids}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<RealizationExample> realization_from_jsonl(std::string_view text) {
  std::vector<RealizationExample> out;
  for_each_json_line(text, [&](const json& j) {
    RealizationExample ex;
    for (const auto& pj : j.at("paths")) {
      LabeledPath p;
      p.nodes = pj.at("nodes").get<std::vector<std::string>>();
      p.labels = labels_from(pj.at("labels"));
      if (auto err = validate_path(p, p.nodes.size()); !err.empty()) throw DataError("realization record: " + err);
      ex.paths.push_back(std::move(p));
    }
    ex.target_ids = j.at("target_ids").get<std::vector<std::int32_t>>();
    if (ex.paths.empty() || ex.target_ids.size() < 3) throw DataError("realization record without paths or target");
    out.push_back(std::move(ex));
  });
  return out;
}

}  // namespace mrg
