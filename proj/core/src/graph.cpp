#include "mrg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>
#include <tuple>

#include "mrg/util.hpp"

namespace mrg {

namespace {

__extension__ typedef unsigned __int128 u128;

bool excluded_word(const std::string& word, const StopwordSet& stopwords) {
  return stopwords.count(word) > 0 || is_punctuation_token(word);
}

const char* origin_name(GraphOrigin o) { return o == GraphOrigin::self_constructed ? "self_constructed" : "imported"; }

}  // namespace

const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "a",       "about",  "above",  "after",   "again",   "against", "all",     "am",     "an",
      "and",     "any",    "are",    "as",      "at",      "be",      "because", "been",   "before",
      "being",   "below",  "between", "both",   "but",     "by",      "can",     "could",  "did",
      "do",      "does",   "doing",  "down",    "during",  "each",    "few",     "for",    "from",
      "further", "had",    "has",    "have",    "having",  "he",      "her",     "here",   "hers",
      "herself", "him",    "himself", "his",    "how",     "i",       "if",      "in",     "into",
      "is",      "it",     "its",    "itself",  "just",    "me",      "more",    "most",   "my",
      "myself",  "no",     "nor",    "not",     "now",     "of",      "off",     "on",     "once",
      "only",    "or",     "other",  "our",     "ours",    "ourselves", "out",   "over",   "own",
      "same",    "she",    "should", "so",      "some",    "such",    "than",    "that",   "the",
      "their",   "theirs", "them",   "themselves", "then", "there",   "these",   "they",   "this",
      "those",   "through", "to",    "too",     "under",   "until",   "up",      "very",   "was",
      "we",      "were",   "what",   "when",    "where",   "which",   "while",   "who",    "whom",
      "why",     "will",   "with",   "would",   "you",     "your",    "yours",   "yourself", "yourselves",
      "s",       "t",      "d",      "ll",      "m",       "re",      "ve",      "don",    "didn",
      "doesn",   "isn",    "wasn",   "weren",   "won",     "wouldn",  "couldn",  "shouldn", "aren",
      "hasn",    "haven",  "hadn",   "also",    "us",      "one",     "got",     "get",    "went"};
  return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file " + path.string());
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    for (auto& tok : tokenize(line)) out.insert(std::move(tok));
  }
  return out;
}

// --- CooccurrenceCounts ---

std::uint64_t CooccurrenceCounts::pair_key(std::int32_t a, std::int32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

std::size_t CooccurrenceCounts::word_freq(std::int32_t w) const {
  auto it = word_doc_freq.find(w);
  return it == word_doc_freq.end() ? 0 : it->second;
}

std::size_t CooccurrenceCounts::pair_freq(std::int32_t a, std::int32_t b) const {
  if (a == b) return 0;
  auto it = pair_doc_freq_.find(pair_key(a, b));
  return it == pair_doc_freq_.end() ? 0 : it->second;
}

void CooccurrenceCounts::add_pair(std::int32_t a, std::int32_t b, std::size_t count) {
  if (a == b || count == 0) return;
  auto& slot = pair_doc_freq_[pair_key(a, b)];
  if (slot == 0) {
    partners_[a].push_back(b);
    partners_[b].push_back(a);
  }
  slot += count;
}

std::vector<std::int32_t> CooccurrenceCounts::partners(std::int32_t w) const {
  auto it = partners_.find(w);
  if (it == partners_.end()) return {};
  auto out = it->second;
  std::sort(out.begin(), out.end());
  return out;
}

void CooccurrenceCounts::merge(const CooccurrenceCounts& other) {
  doc_count += other.doc_count;
  for (const auto& [w, c] : other.word_doc_freq) word_doc_freq[w] += c;
  for (const auto& [key, c] : other.pair_doc_freq_) {
    add_pair(static_cast<std::int32_t>(key >> 32), static_cast<std::int32_t>(key & 0xffffffffULL), c);
  }
}

CooccurrenceCounts count_cooccurrence(std::span<const Document> corpus, const Vocabulary& vocab,
                                      const StopwordSet& stopwords) {
  if (corpus.empty()) throw std::invalid_argument("count_cooccurrence: empty corpus");
  CooccurrenceCounts counts;
  std::vector<bool> usable(vocab.size(), false);
  for (std::size_t id = Vocabulary::kNumSpecials; id < vocab.size(); ++id) {
    usable[id] = !excluded_word(vocab.tokens()[id], stopwords);
  }
  std::vector<std::int32_t> words;
  for (const auto& doc : corpus) {
    ++counts.doc_count;
    words.clear();
    for (const auto& sentence : document_sentences(doc)) {
      for (const auto& tok : tokenize(sentence)) {
        const auto id = vocab.id(tok);
        if (id != Vocabulary::kUnk && usable[static_cast<std::size_t>(id)]) words.push_back(id);
      }
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (std::size_t i = 0; i < words.size(); ++i) {
      ++counts.word_doc_freq[words[i]];
      for (std::size_t j = i + 1; j < words.size(); ++j) counts.add_pair(words[i], words[j]);
    }
  }
  return counts;
}

std::optional<double> pmi(std::int32_t wi, std::int32_t wj, const CooccurrenceCounts& counts) {
  const auto fi = counts.word_freq(wi);
  const auto fj = counts.word_freq(wj);
  if (fi == 0 || fj == 0) throw std::invalid_argument("pmi: word absent from co-occurrence counts");
  const auto fij = counts.pair_freq(wi, wj);
  if (fij == 0) return std::nullopt;
  const double n = static_cast<double>(counts.doc_count);
  const double p_ij = static_cast<double>(fij) / n;
  const double p_i = static_cast<double>(fi) / n;
  const double p_j = static_cast<double>(fj) / n;
  return std::log(p_ij / (p_i * p_j));
}

std::optional<double> pmi(std::string_view wi, std::string_view wj, const CooccurrenceCounts& counts,
                          const Vocabulary& vocab) {
  if (!vocab.contains(wi) || !vocab.contains(wj)) throw std::invalid_argument("pmi: word not in vocabulary");
  return pmi(vocab.id(wi), vocab.id(wj), counts);
}

// --- ConceptGraph ---

std::int32_t ConceptGraph::intern(const std::string& name) {
  auto [it, inserted] = index_.emplace(name, static_cast<std::int32_t>(nodes_.size()));
  if (inserted) {
    nodes_.push_back(name);
    adjacency_.emplace_back();
  }
  return it->second;
}

ConceptGraph ConceptGraph::from_triples(std::span<const Triple> triples, GraphOrigin origin,
                                        std::span<const std::string> extra_nodes) {
  ConceptGraph g;
  g.origin_ = origin;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& t : triples) {
    if (t.head == t.tail) continue;
    if (!seen.emplace(t.head, t.relation, t.tail).second) continue;
    g.triples_.push_back(t);
  }
  std::vector<std::unordered_set<std::int32_t>> present;
  auto link = [&](std::int32_t from, std::int32_t to, const std::string& rel) {
    if (present.size() < g.nodes_.size()) present.resize(g.nodes_.size());
    if (present[static_cast<std::size_t>(from)].insert(to).second) {
      g.adjacency_[static_cast<std::size_t>(from)].push_back({to, rel});
    }
  };
  std::vector<std::pair<std::int32_t, std::int32_t>> ids;
  ids.reserve(g.triples_.size());
  for (const auto& t : g.triples_) {
    const auto h = g.intern(t.head);
    const auto tl = g.intern(t.tail);
    ids.emplace_back(h, tl);
  }
  for (std::size_t i = 0; i < ids.size(); ++i) link(ids[i].first, ids[i].second, g.triples_[i].relation);
  for (std::size_t i = 0; i < ids.size(); ++i) link(ids[i].second, ids[i].first, g.triples_[i].relation);
  for (const auto& n : extra_nodes) g.intern(n);
  return g;
}

bool ConceptGraph::contains(std::string_view concept_name) const {
  return index_.count(std::string(concept_name)) > 0;
}

std::int32_t ConceptGraph::node_id(std::string_view concept_name) const {
  auto it = index_.find(std::string(concept_name));
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> ConceptGraph::isolated_nodes() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (adjacency_[i].empty()) out.push_back(nodes_[i]);
  }
  return out;
}

std::string ConceptGraph::to_tsv() const {
  std::string out;
  for (const auto& t : triples_) {
    out += t.head;
    out += '\t';
    out += t.relation;
    out += '\t';
    out += t.tail;
    out += '\n';
  }
  return out;
}

ConceptGraph build_self_graph(std::span<const Document> corpus, const Vocabulary& vocab,
                              const GraphConfig& config) {
  return build_self_graph(count_cooccurrence(corpus, vocab, config.stopwords), vocab, config);
}

ConceptGraph build_self_graph(const CooccurrenceCounts& counts, const Vocabulary& vocab,
                              const GraphConfig& config) {
  if (config.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  const auto& toks = vocab.tokens();
  std::vector<Triple> triples;
  std::vector<std::string> nodes;
  const u128 n = counts.doc_count;

  struct Candidate {
    std::int32_t id;
    u128 num;  // pair_freq * doc_count
    u128 den;  // freq_i * freq_j
  };
  std::vector<Candidate> cands;

  for (std::size_t wi = Vocabulary::kNumSpecials; wi < vocab.size(); ++wi) {
    if (excluded_word(toks[wi], config.stopwords)) continue;
    nodes.push_back(toks[wi]);
    const auto w = static_cast<std::int32_t>(wi);
    const u128 fi = counts.word_freq(w);
    if (fi == 0) continue;
    cands.clear();
    for (auto p : counts.partners(w)) {
      if (excluded_word(toks[static_cast<std::size_t>(p)], config.stopwords)) continue;
      cands.push_back({p, static_cast<u128>(counts.pair_freq(w, p)) * n, fi * counts.word_freq(p)});
    }
    // PMI ranking compares the exact ratios p(i,j)/(p(i)p(j)); the logarithm
    // is monotone so the order matches the PMI order in any base.
    auto better = [&](const Candidate& a, const Candidate& b) {
      const u128 lhs = a.num * b.den;
      const u128 rhs = b.num * a.den;
      if (lhs != rhs) return lhs > rhs;
      return toks[static_cast<std::size_t>(a.id)] < toks[static_cast<std::size_t>(b.id)];
    };
    const std::size_t keep = std::min(config.top_k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);
    for (std::size_t r = 0; r < keep; ++r) {
      triples.push_back({toks[wi], "pmi", toks[static_cast<std::size_t>(cands[r].id)]});
    }
  }
  return ConceptGraph::from_triples(triples, GraphOrigin::self_constructed, nodes);
}

ImportResult parse_triples(std::string_view tsv, GraphOrigin origin) {
  std::vector<Triple> triples;
  std::size_t skipped = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < tsv.size()) {
    auto nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    auto line = tsv.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos || t1 == 0 ||
        t2 == t1 + 1 || t2 + 1 == line.size()) {
      ++skipped;
      warn("triples line " + std::to_string(line_no) + ": expected head<TAB>relation<TAB>tail");
      continue;
    }
    triples.push_back({std::string(line.substr(0, t1)), std::string(line.substr(t1 + 1, t2 - t1 - 1)),
                       std::string(line.substr(t2 + 1))});
  }
  return {ConceptGraph::from_triples(triples, origin), skipped};
}

ImportResult import_triples(const std::filesystem::path& path, GraphOrigin origin) {
  return parse_triples(read_file(path), origin);
}

std::vector<std::string> neighbors(const ConceptGraph& graph, std::string_view concept_name, std::size_t cap,
                                   const std::unordered_set<std::string>& visited) {
  const auto id = graph.node_id(concept_name);
  if (id < 0) throw std::out_of_range("unknown concept: " + std::string(concept_name));
  std::vector<std::string> out;
  for (const auto& e : graph.adjacency(id)) {
    if (out.size() >= cap) break;
    const auto& name = graph.node_name(e.neighbor);
    if (visited.count(name)) continue;
    out.push_back(name);
  }
  return out;
}

std::vector<std::string> match_concepts(std::span<const std::string> tokens, const ConceptGraph& graph,
                                        const StopwordSet& stopwords) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : tokens) {
    if (stopwords.count(t) || !graph.contains(t)) continue;
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

std::filesystem::path graph_meta_path(const std::filesystem::path& graph_path) {
  auto p = graph_path;
  p += ".meta.json";
  return p;
}

void save_graph(const ConceptGraph& graph, const GraphMetadata& meta, const std::filesystem::path& path,
                const std::string& extra_meta_json) {
  nlohmann::json j = nlohmann::json::parse(extra_meta_json);
  j["origin"] = origin_name(meta.origin);
  j["top_k"] = meta.top_k;
  j["vocab_hash"] = meta.vocab_hash;
  j["doc_count"] = meta.doc_count;
  j["node_count"] = graph.node_count();
  j["triple_count"] = graph.triple_count();
  j["isolated_nodes"] = meta.isolated_nodes;
  write_file_atomic(path, graph.to_tsv());
  write_file_atomic(graph_meta_path(path), j.dump(2) + "\n");
}

ConceptGraph load_graph(const std::filesystem::path& path) {
  const auto tsv = read_file(path);
  GraphOrigin origin = GraphOrigin::imported;
  std::vector<std::string> isolated;
  const auto meta_path = graph_meta_path(path);
  if (std::filesystem::exists(meta_path)) {
    auto j = nlohmann::json::parse(read_file(meta_path), nullptr, false);
    if (j.is_discarded()) throw DataError("malformed graph metadata " + meta_path.string());
    if (j.value("origin", "") == "self_constructed") origin = GraphOrigin::self_constructed;
    if (j.contains("isolated_nodes")) isolated = j["isolated_nodes"].get<std::vector<std::string>>();
  }
  auto parsed = parse_triples(tsv, origin);
  if (parsed.skipped) throw DataError("graph file " + path.string() + " has malformed lines");
  std::vector<Triple> triples = parsed.graph.triples();
  return ConceptGraph::from_triples(triples, origin, isolated);
}

}  // namespace mrg
