#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "mrg/data_builder.hpp"
#include "mrg/util.hpp"
#include "oracles.hpp"

using namespace mrg;

namespace {

ConceptGraph graph_of(const std::string& tsv) { return parse_triples(tsv).graph; }

std::map<std::string, std::vector<std::string>> adjacency_of(const ConceptGraph& g) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& n : g.nodes()) adj[n] = neighbors(g, n, 1000);
  return adj;
}

const LabellingExample* find_hop(const std::vector<LabellingExample>& exs, std::size_t hop) {
  for (const auto& e : exs)
    if (e.hop == hop) return &e;
  return nullptr;
}

ConceptLabel label_of(const LabellingExample& ex, const std::string& c) {
  for (std::size_t i = 0; i < ex.candidates.size(); ++i)
    if (ex.candidates[i] == c) return ex.labels[i];
  ADD_FAILURE() << c << " is not a candidate";
  return ConceptLabel::other;
}

}  // namespace

TEST(SentencePairs, Counts) {
  EXPECT_EQ(sentence_pairs({"s", {"a."}}).size(), 1u);
  const auto three = sentence_pairs({"s", {"a.", "b.", "c."}});
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[0], std::make_pair(std::string("s"), std::string("a.")));
  EXPECT_EQ(three[2], std::make_pair(std::string("b."), std::string("c.")));
  EXPECT_TRUE(sentence_pairs({"s", {}}).empty());
}

TEST(FindLabeledPaths, TwoHopChain) {
  const auto g = graph_of("a\tr\tb\nb\tr\tc\n");
  const std::vector<std::string> former{"a"}, latter{"c"};
  const auto paths = find_labeled_paths(former, latter, g, 3);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].nodes, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(paths[0].labels, (std::vector<ConceptLabel>{ConceptLabel::intermediate, ConceptLabel::intermediate,
                                                         ConceptLabel::target}));
}

TEST(FindLabeledPaths, DirectEdge) {
  const auto g = graph_of("a\tr\tc\n");
  const std::vector<std::string> former{"a"}, latter{"c"};
  const auto paths = find_labeled_paths(former, latter, g, 3);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].nodes, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(paths[0].labels, (std::vector<ConceptLabel>{ConceptLabel::intermediate, ConceptLabel::target}));
}

TEST(FindLabeledPaths, Disconnected) {
  const auto g = graph_of("a\tr\tb\nc\tr\td\n");
  const std::vector<std::string> former{"a"}, latter{"c"};
  EXPECT_TRUE(find_labeled_paths(former, latter, g, 3).empty());
}

TEST(FindLabeledPaths, ShortestWinsAndTiesAreLexicographic) {
  const auto g = graph_of("a\tr\tz\nz\tr\tc\na\tr\tb\nb\tr\tc\na\tr\tx\nx\tr\ty\ny\tr\tc\n");
  const std::vector<std::string> former{"a"}, latter{"c"};
  const auto paths = find_labeled_paths(former, latter, g, 3);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].nodes, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(FindLabeledPaths, HopBoundRespected) {
  const auto g = graph_of("a\tr\tb\nb\tr\tc\nc\tr\td\n");
  const std::vector<std::string> former{"a"}, latter{"d"};
  EXPECT_TRUE(find_labeled_paths(former, latter, g, 2).empty());
  EXPECT_EQ(find_labeled_paths(former, latter, g, 3).size(), 1u);
  EXPECT_THROW(find_labeled_paths(former, latter, g, 0), std::invalid_argument);
}

TEST(FindLabeledPaths, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 20);
    std::string tsv;
    const int edges = n + static_cast<int>(rng() % (2 * n));
    for (int e = 0; e < edges; ++e)
      tsv += "c" + std::to_string(rng() % n) + "\tr\tc" + std::to_string(rng() % n) + "\n";
    const auto g = graph_of(tsv);
    std::vector<std::string> former, latter;
    for (int i = 0; i < 3; ++i) former.push_back("c" + std::to_string(rng() % n));
    for (int i = 0; i < 3; ++i) latter.push_back("c" + std::to_string(rng() % n));
    const std::size_t hops = 1 + rng() % 4;
    const std::size_t cap = 1 + rng() % 5;

    const auto paths = find_labeled_paths(former, latter, g, hops, cap);
    std::set<std::tuple<std::string, std::string, std::size_t>> got;
    for (const auto& p : paths) {
      ASSERT_EQ(validate_path(p, hops), "");
      got.emplace(p.start(), p.end(), p.hops());
    }
    const std::set<std::string> latter_set(latter.begin(), latter.end());
    ASSERT_EQ(got, oracle::shortest_paths(adjacency_of(g), former, latter_set, hops, cap)) << "trial " << trial;
  }
}

TEST(LabellingExamples, UnrolledChain) {
  // d hangs off a but leads nowhere
  const auto g = graph_of("a\tr\tb\nb\tr\tc\na\tr\td\n");
  const std::vector<std::string> former{"a"}, latter{"c"};
  const auto paths = find_labeled_paths(former, latter, g, 3);
  const std::vector<std::int32_t> ctx{7, 8};
  const auto exs = labelling_examples_for_pair(ctx, paths, g, 20);
  ASSERT_EQ(exs.size(), 2u);
  const auto* h1 = find_hop(exs, 1);
  const auto* h2 = find_hop(exs, 2);
  ASSERT_TRUE(h1 && h2);
  EXPECT_EQ(h1->context_ids, ctx);
  EXPECT_EQ(label_of(*h1, "b"), ConceptLabel::intermediate);
  EXPECT_EQ(label_of(*h1, "d"), ConceptLabel::other);
  EXPECT_EQ(label_of(*h2, "c"), ConceptLabel::target);
}

TEST(LabellingExamples, TargetDominatesAcrossPaths) {
  // b is a target of one path and an intermediate of another
  const auto g = graph_of("a\tr\tb\nb\tr\tc\n");
  const std::vector<std::string> former{"a"}, latter{"b", "c"};
  const auto paths = find_labeled_paths(former, latter, g, 3);
  const std::vector<LabeledPath> both{LabeledPath::from_nodes({"a", "b"}), LabeledPath::from_nodes({"a", "b", "c"})};
  const auto exs = labelling_examples_for_pair(std::vector<std::int32_t>{1}, both, g, 20);
  for (const auto& ex : exs)
    for (std::size_t i = 0; i < ex.candidates.size(); ++i)
      if (ex.candidates[i] == "b") EXPECT_EQ(ex.labels[i], ConceptLabel::target);
  EXPECT_EQ(paths.size(), 1u);  // search stops at b
}

namespace {

std::vector<Document> fixture_corpus() {
  return load_corpus(std::filesystem::path(MRG_FIXTURE_DIR) / "corpus.jsonl", CorpusFormat::jsonl).documents;
}

}  // namespace

TEST(Datasets, RealizationCountMatchesOracle) {
  const auto docs = fixture_corpus();
  const auto vocab = build_vocab(docs, 16000);
  GraphConfig gc;
  const auto graph = build_self_graph(docs, vocab, gc);
  DataConfig dc;
  const auto adj = adjacency_of(graph);
  std::size_t pairs = 0, with_paths = 0;
  for (const auto& d : docs) {
    for (const auto& [former, latter] : sentence_pairs(d)) {
      ++pairs;
      const auto fc = match_concepts(tokenize(former), graph, dc.stopwords);
      const auto lc = match_concepts(tokenize(latter), graph, dc.stopwords);
      const std::set<std::string> ls(lc.begin(), lc.end());
      if (!oracle::shortest_paths(adj, fc, ls, dc.max_hops, dc.neighbor_cap).empty()) ++with_paths;
    }
  }
  const auto real = build_realization_dataset(docs, graph, vocab, dc);
  EXPECT_EQ(pairs, 36u);
  EXPECT_GT(with_paths, 0u);
  EXPECT_EQ(real.size(), with_paths);
  for (const auto& ex : real) {
    EXPECT_EQ(ex.target_ids.front(), Vocabulary::kBos);
    EXPECT_EQ(ex.target_ids.back(), Vocabulary::kEos);
    for (const auto& p : ex.paths) EXPECT_EQ(validate_path(p, dc.max_hops), "");
  }
}

TEST(Datasets, LabellingInvariantsAndDeterminism) {
  const auto docs = fixture_corpus();
  const auto vocab = build_vocab(docs, 16000);
  GraphConfig gc;
  const auto graph = build_self_graph(docs, vocab, gc);
  DataConfig dc;
  const auto a = build_labelling_dataset(docs, graph, vocab, dc);
  const auto b = build_labelling_dataset(docs, graph, vocab, dc);
  EXPECT_EQ(a, b);
  ASSERT_FALSE(a.empty());
  for (const auto& ex : a) {
    ASSERT_EQ(ex.candidates.size(), ex.labels.size());
    EXPECT_GE(ex.hop, 1u);
    EXPECT_LE(ex.hop, dc.max_hops);
    EXPECT_LE(ex.candidates.size(), dc.neighbor_cap);
    bool any_positive = false;
    for (auto l : ex.labels) any_positive |= l != ConceptLabel::other;
    EXPECT_TRUE(any_positive);
  }
}

TEST(Datasets, PairWithoutPathsContributesNothing) {
  const auto g = graph_of("alpha\tr\tbeta\ngamma\tr\tdelta\n");
  std::vector<Document> docs{{"alpha here", {"gamma there."}}};
  const auto vocab = build_vocab(docs, 100);
  DataConfig dc;
  EXPECT_TRUE(build_labelling_dataset(docs, g, vocab, dc).empty());
  EXPECT_TRUE(build_realization_dataset(docs, g, vocab, dc).empty());
}

TEST(Datasets, TwoPathsGroupedInOneExample) {
  const auto g = graph_of("alpha\tr\tbeta\nalpha\tr\tgamma\n");
  std::vector<Document> docs{{"alpha", {"beta gamma."}}};
  const auto vocab = build_vocab(docs, 100);
  DataConfig dc;
  const auto real = build_realization_dataset(docs, g, vocab, dc);
  ASSERT_EQ(real.size(), 1u);
  EXPECT_EQ(real[0].paths.size(), 2u);
}

TEST(Jsonl, RoundTrips) {
  const auto docs = fixture_corpus();
  const auto vocab = build_vocab(docs, 16000);
  GraphConfig gc;
  const auto graph = build_self_graph(docs, vocab, gc);
  DataConfig dc;
  const auto lab = build_labelling_dataset(docs, graph, vocab, dc);
  const auto real = build_realization_dataset(docs, graph, vocab, dc);
  EXPECT_EQ(labelling_from_jsonl(labelling_to_jsonl(lab)), lab);
  EXPECT_EQ(realization_from_jsonl(realization_to_jsonl(real)), real);
  EXPECT_THROW(labelling_from_jsonl("{not json}\n"), DataError);
}

TEST(LabeledPath, Validation) {
  EXPECT_THROW(LabeledPath::from_nodes({"a"}), std::invalid_argument);
  auto p = LabeledPath::from_nodes({"a", "b", "a"});
  EXPECT_NE(validate_path(p, 3), "");
  EXPECT_NE(validate_path(LabeledPath::from_nodes({"a", "b", "c"}), 1), "");
  EXPECT_EQ(parse_label(label_name(ConceptLabel::intermediate)), ConceptLabel::intermediate);
  EXPECT_THROW(parse_label("nope"), DataError);
}
