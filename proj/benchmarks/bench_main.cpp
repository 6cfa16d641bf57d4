#include <benchmark/benchmark.h>

#include <random>

#include "mrg/data_builder.hpp"
#include "mrg/graph.hpp"
#include "mrg/nn/transformer.hpp"
#include "mrg/realizer.hpp"

using namespace mrg;

namespace {

std::vector<Document> ring_corpus(int words, int window) {
  std::vector<Document> docs;
  for (int i = 0; i < words; ++i) {
    std::string text;
    for (int j = 0; j < window; ++j) text += "w" + std::to_string((i + j) % words) + " ";
    docs.push_back({text, {}});
  }
  return docs;
}

ConceptGraph random_graph(int nodes, int edges, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string tsv;
  for (int e = 0; e < edges; ++e)
    tsv += "c" + std::to_string(rng() % nodes) + "\tr\tc" + std::to_string(rng() % nodes) + "\n";
  return parse_triples(tsv).graph;
}

}  // namespace

static void BM_SelfGraph(benchmark::State& state) {
  const auto docs = ring_corpus(static_cast<int>(state.range(0)), 11);
  const auto vocab = build_vocab(docs, docs.size() + 5);
  GraphConfig config;
  config.stopwords = {};
  for (auto _ : state) benchmark::DoNotOptimize(build_self_graph(docs, vocab, config).triple_count());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelfGraph)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_FindLabeledPaths(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const auto g = random_graph(nodes, nodes * 4, 7);
  const std::vector<std::string> former{"c1", "c2", "c3"};
  const std::vector<std::string> latter{"c10", "c20", "c30"};
  for (auto _ : state) benchmark::DoNotOptimize(find_labeled_paths(former, latter, g, 3, 20).size());
}
BENCHMARK(BM_FindLabeledPaths)->Arg(200)->Arg(2000);

static void BM_EncoderForward(benchmark::State& state) {
  auto dims = nn::labeller_dims(1000);
  dims.dropout = 0.0f;
  const auto params = nn::init_parameters<float>(dims, 1);
  std::vector<std::int32_t> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 5 + static_cast<std::int32_t>(i % 900);
  for (auto _ : state) benchmark::DoNotOptimize(nn::encode_sequence<float>(ids, params, true).sum());
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(64);

static void BM_DecodeStep(benchmark::State& state) {
  auto dims = nn::realizer_dims(2000);
  dims.dropout = 0.0f;
  const auto params = nn::init_parameters<float>(dims, 2);
  const nn::Matrix<float> reps = nn::Matrix<float>::Random(4, dims.d_model);
  const auto memory = encode_paths<float>(reps, params);
  std::vector<std::int32_t> prefix{Vocabulary::kBos};
  for (int i = 0; i < state.range(0); ++i) prefix.push_back(5 + i);
  for (auto _ : state) benchmark::DoNotOptimize(nn::decode_step<float>(prefix, memory, params).sum());
}
BENCHMARK(BM_DecodeStep)->Arg(1)->Arg(20);
BENCHMARK_MAIN();
