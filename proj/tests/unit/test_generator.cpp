#include <gtest/gtest.h>

#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "mrg/generator.hpp"

using namespace mrg;

namespace {

// Answers from the roles each candidate played in the training pair whose
// former sentence equals the context.
class OracleLabeller final : public CandidateLabeller {
 public:
  void learn(const std::vector<std::string>& context, const std::vector<LabeledPath>& paths) {
    auto& roles = roles_[context];
    for (const auto& p : paths) {
      for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) roles.emplace(p.nodes[i], ConceptLabel::intermediate);
      roles[p.end()] = ConceptLabel::target;
    }
  }

  std::vector<CandidateScore> label(std::span<const std::string> context, std::span<const std::string> candidates,
                                    std::size_t) const override {
    const auto it = roles_.find(std::vector<std::string>(context.begin(), context.end()));
    std::vector<CandidateScore> out;
    for (const auto& c : candidates) {
      CandidateScore s;
      s.label = ConceptLabel::other;
      if (it != roles_.end()) {
        const auto r = it->second.find(c);
        if (r != it->second.end()) s.label = r->second;
      }
      s.probabilities = {0.0, 0.0, 0.0};
      s.probabilities[static_cast<std::size_t>(s.label)] = 1.0;
      out.push_back(s);
    }
    return out;
  }

 private:
  std::map<std::vector<std::string>, std::map<std::string, ConceptLabel>> roles_;
};

// Returns the sentence it saw paired with the same set of targets.
class MemorizingRealizer final : public SentenceRealizer {
 public:
  void learn(const std::vector<LabeledPath>& paths, std::vector<std::string> sentence) {
    table_[key(paths)] = std::move(sentence);
  }
  std::vector<std::string> realize(std::span<const LabeledPath> paths) const override {
    const auto it = table_.find(key(paths));
    return it == table_.end() ? std::vector<std::string>{"<unk>"} : it->second;
  }

 private:
  static std::set<std::string> key(std::span<const LabeledPath> paths) {
    std::set<std::string> k;
    for (const auto& p : paths) k.insert(p.end());
    return k;
  }
  std::map<std::set<std::string>, std::vector<std::string>> table_;
};

class FixedLabeller final : public CandidateLabeller {
 public:
  explicit FixedLabeller(std::uint64_t salt) : salt_(salt) {}
  std::vector<CandidateScore> label(std::span<const std::string>, std::span<const std::string> candidates,
                                    std::size_t hop) const override {
    std::vector<CandidateScore> out;
    for (const auto& c : candidates) {
      CandidateScore s;
      const auto h = std::hash<std::string>{}(c) ^ (salt_ * 31 + hop);
      s.label = static_cast<ConceptLabel>(h % 3);
      s.probabilities = {0.2, 0.2, 0.2};
      s.probabilities[static_cast<std::size_t>(s.label)] = 0.6;
      out.push_back(s);
    }
    return out;
  }

 private:
  std::uint64_t salt_;
};

class EchoRealizer final : public SentenceRealizer {
 public:
  std::vector<std::string> realize(std::span<const LabeledPath> paths) const override {
    std::vector<std::string> out;
    for (const auto& p : paths) out.push_back(p.end());
    out.push_back(".");
    return out;
  }
};

ConceptGraph world_graph() {
  return parse_triples(
             "sun\tr\theat\nheat\tr\tbeach\nbeach\tr\twaves\nwaves\tr\tsurfers\nsun\tr\tsky\n"
             "sky\tr\tclouds\nsurfers\tr\tboards\n")
      .graph;
}

}  // namespace

TEST(ContextWindow, LastSentences) {
  const std::vector<std::vector<std::string>> h{{"a", "b"}, {"c"}, {"d", "e"}};
  EXPECT_EQ(context_window(h, 1), (std::vector<std::string>{"d", "e"}));
  EXPECT_EQ(context_window(h, 2), (std::vector<std::string>{"c", "d", "e"}));
  EXPECT_EQ(context_window(h, 10).size(), 5u);
}

TEST(Generate, ZeroSentences) {
  EchoRealizer realizer;
  FixedLabeller labeller(1);
  GeneratorConfig config;
  config.max_sentences = 0;
  const auto s = generate("the sun was out", world_graph(), labeller, realizer, config);
  EXPECT_TRUE(s.generated_sentences.empty());
  EXPECT_EQ(s.stop_reason, StopReason::max_sentences);
}

TEST(Generate, NoConceptsStopsWithEmptyFrontier) {
  EchoRealizer realizer;
  FixedLabeller labeller(1);
  GeneratorConfig config;
  const auto s = generate("nothing relevant here", world_graph(), labeller, realizer, config);
  EXPECT_TRUE(s.generated_sentences.empty());
  EXPECT_EQ(s.stop_reason, StopReason::empty_frontier);
}

TEST(Generate, NoTargetStops) {
  class AllOther final : public CandidateLabeller {
    std::vector<CandidateScore> label(std::span<const std::string>, std::span<const std::string> c,
                                      std::size_t) const override {
      return std::vector<CandidateScore>(c.size(), CandidateScore{ConceptLabel::other, {0.9, 0.05, 0.05}});
    }
  } labeller;
  EchoRealizer realizer;
  GeneratorConfig config;
  const auto s = generate("the sun", world_graph(), labeller, realizer, config);
  EXPECT_EQ(s.stop_reason, StopReason::no_target);
  EXPECT_TRUE(s.generated_sentences.empty());
  config.reasoner.fallback = true;
  EXPECT_EQ(generate("the sun", world_graph(), labeller, realizer, config).generated_sentences.size(), 4u);
}

TEST(Generate, WindowZeroRejected) {
  EchoRealizer realizer;
  FixedLabeller labeller(1);
  GeneratorConfig config;
  config.window = 0;
  EXPECT_THROW(generate("sun", world_graph(), labeller, realizer, config), std::invalid_argument);
}

TEST(Generate, MemorizingStubsReproduceDocument) {
  const Document doc{"The sun came up.",
                     {"It brought heat to us.", "We walked to the beach.", "The waves rolled in.",
                      "Surfers rode them."}};
  const auto graph = world_graph();
  DataConfig dc;
  OracleLabeller labeller;
  MemorizingRealizer realizer;
  std::vector<std::vector<std::string>> expected;
  for (const auto& pp : collect_pair_paths(std::vector<Document>{doc}, graph, dc)) {
    ASSERT_FALSE(pp.paths.empty()) << pp.former << " -> " << pp.latter;
    labeller.learn(tokenize(pp.former), pp.paths);
    realizer.learn(pp.paths, tokenize(pp.latter));
    expected.push_back(tokenize(pp.latter));
  }
  GeneratorConfig config;
  config.max_sentences = 4;
  const auto s = generate(doc.source, graph, labeller, realizer, config);
  EXPECT_EQ(s.generated_sentences, expected);
  EXPECT_EQ(s.stop_reason, StopReason::max_sentences);
  EXPECT_EQ(s.per_sentence_paths.size(), s.generated_sentences.size());
}

TEST(Generate, InvariantsOverRandomStubs) {
  std::mt19937_64 rng(8);
  const auto graph = world_graph();
  const std::vector<std::string> words{"sun", "sky", "heat", "beach", "waves", "surfers", "clouds", "boards", "day"};
  EchoRealizer realizer;
  for (int trial = 0; trial < 60; ++trial) {
    FixedLabeller labeller(rng());
    GeneratorConfig config;
    config.max_sentences = rng() % 6;
    config.window = 1 + rng() % 3;
    config.reasoner.fallback = rng() % 2;
    std::string source;
    for (int i = 0; i < 3; ++i) source += words[rng() % words.size()] + " ";
    const auto s = generate(source, graph, labeller, realizer, config);
    ASSERT_LE(s.generated_sentences.size(), config.max_sentences);
    ASSERT_EQ(s.per_sentence_paths.size(), s.generated_sentences.size());
    ASSERT_EQ(s.contexts.size(), s.generated_sentences.size());
    for (std::size_t j = 0; j < s.per_sentence_paths.size(); ++j) {
      for (const auto& p : s.per_sentence_paths[j]) {
        const auto& ctx = s.contexts[j];
        ASSERT_NE(std::find(ctx.begin(), ctx.end(), p.path.start()), ctx.end());
      }
    }
    ASSERT_EQ(generation_to_json(s), generation_to_json(generate(source, graph, labeller, realizer, config)));
  }
}

TEST(GenerationJson, Fields) {
  EchoRealizer realizer;
  FixedLabeller labeller(3);
  GeneratorConfig config;
  config.max_sentences = 2;
  config.reasoner.fallback = true;
  const auto j = nlohmann::json::parse(generation_to_json(generate("sun", world_graph(), labeller, realizer, config)));
  EXPECT_EQ(j.at("source"), "sun");
  EXPECT_EQ(j.at("sentences").size(), j.at("paths").size());
  EXPECT_TRUE(j.at("stop_reason").is_string());
}
