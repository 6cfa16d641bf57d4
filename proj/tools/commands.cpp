#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "mrg/checks.hpp"
#include "mrg/corpus.hpp"
#include "mrg/data_builder.hpp"
#include "mrg/generator.hpp"
#include "mrg/graph.hpp"
#include "mrg/labeller.hpp"
#include "mrg/metrics.hpp"
#include "mrg/nn/checkpoint.hpp"
#include "mrg/realizer.hpp"
#include "mrg/util.hpp"

namespace mrg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CorpusFormat corpus_format(const fs::path& p) {
  return p.extension() == ".tsv" ? CorpusFormat::tsv : CorpusFormat::jsonl;
}

std::vector<Document> read_corpus(const fs::path& p) {
  auto r = load_corpus(p, corpus_format(p));
  if (r.documents.empty()) throw DataError("corpus has no usable documents: " + p.string());
  return std::move(r.documents);
}

json input_entry(const fs::path& p) { return {{"file", p.filename().string()}, {"fnv1a64", hex64(hash_file(p))}}; }

std::string meta_json(const std::string& command, const json& config, const json& inputs, json extra = json::object()) {
  extra["command"] = command;
  extra["config"] = config;
  extra["inputs"] = inputs;
  return extra.dump(2) + "\n";
}

fs::path meta_path(const fs::path& artifact) { return fs::path(artifact.string() + ".meta.json"); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

StopwordSet stopwords_from(const std::string& path) {
  return path.empty() ? default_stopwords() : load_stopwords(path);
}

// ---------------------------------------------------------------- checkpoints

struct LoadedModel {
  nn::ParameterStore<float> params;
  Vocabulary vocab;
  std::uint64_t trained_steps = 0;
  std::string kind;
};

void write_model(const fs::path& out, const std::string& kind, nn::ParameterStore<float> params, const Vocabulary& vocab,
                 const TrainLog& log, const json& config, const json& inputs) {
  json meta = {{"kind", kind},
               {"config", config},
               {"inputs", inputs},
               {"vocab", vocab.regular_tokens()},
               {"trained_steps", log.steps},
               {"epoch_loss", log.epoch_loss}};
  nn::Checkpoint ckpt{std::move(params), vocab.hash(), meta.dump()};
  ensure_parent(out);
  nn::save_checkpoint(ckpt, out);
  json log_json = {{"kind", kind}, {"steps", log.steps}, {"epoch_loss", log.epoch_loss}};
  write_file_atomic(fs::path(out.string() + ".log.json"), log_json.dump(2) + "\n");
}

LoadedModel read_model(const fs::path& path, const std::string& expected_kind) {
  auto ckpt = nn::load_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata_json);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  if (!meta.contains("vocab") || !meta.contains("trained_steps")) {
    throw DataError(path.string() + ": checkpoint metadata lacks vocab or trained_steps");
  }
  LoadedModel m;
  m.kind = meta.value("kind", std::string());
  if (m.kind != expected_kind) throw DataError(path.string() + ": expected a " + expected_kind + " checkpoint");
  m.vocab = Vocabulary(meta["vocab"].get<std::vector<std::string>>());
  if (m.vocab.hash() != ckpt.vocab_hash) throw DataError(path.string() + ": vocabulary hash mismatch");
  m.trained_steps = meta["trained_steps"].get<std::uint64_t>();
  m.params = std::move(ckpt.params);
  return m;
}

fs::path default_vocab_for(const fs::path& data) { return data.parent_path() / "vocab.txt"; }

// ---------------------------------------------------------------- config files

// A config file is flat `key = value` text whose keys are flag names. Keys
// already given on the command line are skipped, so flags win.
void inject_config(std::vector<std::string>& args) {
  fs::path config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (config.empty()) return;
  std::ifstream in(config);
  if (!in) throw CLI::ValidationError("--config", "cannot read config file " + config.string());
  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--config", "expected key=value: " + line);
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config" || given(key)) continue;
    if (value == "true") {
      extra.push_back("--" + key);
    } else if (value != "false") {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

// ---------------------------------------------------------------- commands

struct ModelFlags {
  int hidden = 128;
  int heads = 8;
  int ff_dim = 512;
  int encoder_layers = 2;
  int decoder_layers = 2;
  float dropout = 0.1f;

  void add(CLI::App* app, bool with_decoder) {
    app->add_option("--hidden", hidden, "model width")->check(CLI::PositiveNumber);
    app->add_option("--heads", heads, "attention heads")->check(CLI::PositiveNumber);
    app->add_option("--ff-dim", ff_dim, "feed-forward width")->check(CLI::PositiveNumber);
    app->add_option("--encoder-layers", encoder_layers)->check(CLI::PositiveNumber);
    if (with_decoder) app->add_option("--decoder-layers", decoder_layers)->check(CLI::PositiveNumber);
    app->add_option("--dropout", dropout)->check(CLI::Range(0.0, 0.99));
  }
  void apply(nn::ModelDims& d) const {
    d.d_model = hidden;
    d.heads = heads;
    d.ff_dim = ff_dim;
    d.encoder_layers = encoder_layers;
    if (d.decoder) d.decoder_layers = decoder_layers;
    d.dropout = dropout;
  }
  json to_json(const nn::ModelDims& d) const {
    return {{"hidden", d.d_model},         {"heads", d.heads},     {"ff_dim", d.ff_dim},
            {"encoder_layers", d.encoder_layers}, {"decoder_layers", d.decoder_layers}, {"dropout", d.dropout},
            {"vocab_size", d.vocab_size}};
  }
};

struct TrainFlags {
  double lr;
  std::size_t batch_size = 64;
  std::size_t epochs;
  std::uint64_t seed = 42;

  void add(CLI::App* app) {
    app->add_option("--lr", lr, "learning rate")->check(CLI::PositiveNumber);
    app->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);
    app->add_option("--epochs", epochs)->check(CLI::NonNegativeNumber);
    app->add_option("--seed", seed);
  }
  TrainOptions options() const { return {epochs, batch_size, lr, seed}; }
  json to_json() const { return {{"lr", lr}, {"batch_size", batch_size}, {"epochs", epochs}, {"seed", seed}}; }
};

struct Options {
  std::string config;
  // shared
  std::string corpus, out, graph, stopwords, vocab, data;
  std::size_t top_k = 20;
  std::size_t vocab_limit = 16000;
  std::size_t neighbor_cap = 20;
  std::size_t max_hops = 3;
  // import-graph
  std::string triples;
  // build-data
  std::string out_labelling, out_realization, vocab_out;
  // train
  ModelFlags model;
  TrainFlags labeller_train{2e-5, 64, 3, 42};
  TrainFlags realizer_train{1e-3, 64, 50, 42};
  // generate
  std::string source_file, labeller, realizer;
  std::size_t max_sentences = 4;
  std::size_t window = 1;
  std::size_t max_paths = 16;
  std::size_t max_len = kDefaultMaxSentenceLength;
  bool fallback = false;
  // evaluate
  std::string generated, training, references;
  // selfcheck
  std::uint64_t seed = 1;
};

int cmd_build_graph(const Options& o) {
  const auto docs = read_corpus(o.corpus);
  const auto vocab = build_vocab(docs, o.vocab_limit);
  GraphConfig cfg;
  cfg.top_k = o.top_k;
  cfg.stopwords = stopwords_from(o.stopwords);
  const auto graph = build_self_graph(docs, vocab, cfg);
  GraphMetadata meta{GraphOrigin::self_constructed, o.top_k, hex64(vocab.hash()), docs.size(), graph.isolated_nodes()};
  json config = {{"top_k", o.top_k}, {"vocab_limit", o.vocab_limit}, {"stopwords", o.stopwords.empty() ? "default" : fs::path(o.stopwords).filename().string()}};
  json inputs = {{"corpus", input_entry(o.corpus)}};
  if (!o.stopwords.empty()) inputs["stopwords"] = input_entry(o.stopwords);
  ensure_parent(o.out);
  save_graph(graph, meta, o.out, json({{"command", "build-graph"}, {"config", config}, {"inputs", inputs}}).dump());
  std::printf("graph: %zu nodes, %zu triples (%zu documents, vocab %zu)\n", graph.node_count(), graph.triple_count(),
              docs.size(), vocab.size());
  return kOk;
}

int cmd_import_graph(const Options& o) {
  auto r = import_triples(o.triples);
  if (r.graph.triple_count() == 0) throw DataError("no valid triples in " + o.triples);
  GraphMetadata meta;
  meta.origin = GraphOrigin::imported;
  meta.isolated_nodes = r.graph.isolated_nodes();
  json inputs = {{"triples", input_entry(o.triples)}};
  ensure_parent(o.out);
  save_graph(r.graph, meta, o.out,
             json({{"command", "import-graph"}, {"config", json::object()}, {"inputs", inputs}, {"skipped_lines", r.skipped}}).dump());
  std::printf("graph: %zu nodes, %zu triples (%zu malformed lines skipped)\n", r.graph.node_count(),
              r.graph.triple_count(), r.skipped);
  return kOk;
}

int cmd_build_data(const Options& o) {
  const auto docs = read_corpus(o.corpus);
  const auto graph = load_graph(o.graph);
  const auto vocab = build_vocab(docs, o.vocab_limit);
  DataConfig cfg;
  cfg.max_hops = o.max_hops;
  cfg.neighbor_cap = o.neighbor_cap;
  cfg.stopwords = stopwords_from(o.stopwords);
  const auto labelling = build_labelling_dataset(docs, graph, vocab, cfg);
  const auto realization = build_realization_dataset(docs, graph, vocab, cfg);

  const fs::path vocab_out = o.vocab_out.empty() ? fs::path(o.out_labelling).parent_path() / "vocab.txt" : fs::path(o.vocab_out);
  json config = {{"max_hops", o.max_hops}, {"neighbor_cap", o.neighbor_cap}, {"vocab_limit", o.vocab_limit}};
  json inputs = {{"corpus", input_entry(o.corpus)}, {"graph", input_entry(o.graph)}};
  for (const auto& p : {fs::path(o.out_labelling), fs::path(o.out_realization), vocab_out}) ensure_parent(p);
  vocab.save(vocab_out);
  write_file_atomic(o.out_labelling, labelling_to_jsonl(labelling));
  write_file_atomic(meta_path(o.out_labelling),
                    meta_json("build-data", config, inputs, {{"examples", labelling.size()}, {"vocab_hash", hex64(vocab.hash())}}));
  write_file_atomic(o.out_realization, realization_to_jsonl(realization));
  write_file_atomic(meta_path(o.out_realization),
                    meta_json("build-data", config, inputs, {{"examples", realization.size()}, {"vocab_hash", hex64(vocab.hash())}}));
  std::printf("labelling examples: %zu\nrealization examples: %zu\nvocabulary: %zu tokens -> %s\n", labelling.size(),
              realization.size(), vocab.size(), vocab_out.string().c_str());
  return kOk;
}

void print_log(const TrainLog& log) {
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) std::printf("epoch %zu loss %.6f\n", e + 1, log.epoch_loss[e]);
  std::printf("steps: %llu\n", static_cast<unsigned long long>(log.steps));
}

int cmd_train_labeller(const Options& o) {
  const fs::path vocab_path = o.vocab.empty() ? default_vocab_for(o.data) : fs::path(o.vocab);
  const auto vocab = Vocabulary::load(vocab_path);
  const auto dataset = labelling_from_jsonl(read_file(o.data));
  if (dataset.empty()) throw DataError("labelling dataset is empty: " + o.data);
  auto dims = nn::labeller_dims(static_cast<int>(vocab.size()));
  o.model.apply(dims);
  dims.validate();
  auto params = nn::init_parameters<float>(dims, o.labeller_train.seed);
  nn::AdamState<float> adam(o.labeller_train.lr);
  const auto log = train_labeller(dataset, vocab, params, adam, o.labeller_train.options());
  print_log(log);
  std::printf("candidate accuracy: %.4f\n", labeller_accuracy(dataset, vocab, params));
  json config = o.labeller_train.to_json();
  config["model"] = o.model.to_json(dims);
  write_model(o.out, "labeller", std::move(params), vocab, log, config,
              {{"data", input_entry(o.data)}, {"vocab", input_entry(vocab_path)}});
  return kOk;
}

int cmd_train_realizer(const Options& o) {
  const fs::path vocab_path = o.vocab.empty() ? default_vocab_for(o.data) : fs::path(o.vocab);
  const auto vocab = Vocabulary::load(vocab_path);
  const auto graph = load_graph(o.graph);
  const auto dataset = realization_from_jsonl(read_file(o.data));
  if (dataset.empty()) throw DataError("realization dataset is empty: " + o.data);
  auto dims = nn::realizer_dims(static_cast<int>(vocab.size()));
  o.model.apply(dims);
  dims.validate();
  auto params = nn::init_parameters<float>(dims, o.realizer_train.seed);
  nn::AdamState<float> adam(o.realizer_train.lr);
  const auto log = train_realizer(dataset, graph, vocab, params, adam, o.realizer_train.options(), o.neighbor_cap);
  print_log(log);
  std::printf("token accuracy: %.4f\n", realizer_token_accuracy(dataset, graph, vocab, params, o.neighbor_cap));
  json config = o.realizer_train.to_json();
  config["model"] = o.model.to_json(dims);
  config["feature_cap"] = o.neighbor_cap;
  write_model(o.out, "realizer", std::move(params), vocab, log, config,
              {{"data", input_entry(o.data)}, {"vocab", input_entry(vocab_path)}, {"graph", input_entry(o.graph)}});
  return kOk;
}

std::vector<std::string> read_sources(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '{') {
      try {
        const auto j = json::parse(line);
        if (j.contains("source") && j["source"].is_string()) {
          out.push_back(j["source"].get<std::string>());
          continue;
        }
      } catch (const json::exception&) {
      }
    }
    out.push_back(line);
  }
  if (out.empty()) throw DataError("no sources in " + p.string());
  return out;
}

int cmd_generate(const Options& o) {
  const auto graph = load_graph(o.graph);
  auto lab = read_model(o.labeller, "labeller");
  auto real = read_model(o.realizer, "realizer");
  if (!(lab.vocab == real.vocab)) throw DataError("labeller and realizer were trained with different vocabularies");
  const NeuralLabeller labeller(std::move(lab.params), lab.vocab, lab.trained_steps);
  const NeuralRealizer realizer(std::move(real.params), real.vocab, graph, real.trained_steps, o.neighbor_cap, o.max_len);

  GeneratorConfig cfg;
  cfg.max_sentences = o.max_sentences;
  cfg.window = o.window;
  cfg.reasoner.max_hops = o.max_hops;
  cfg.reasoner.neighbor_cap = o.neighbor_cap;
  cfg.reasoner.max_paths = o.max_paths;
  cfg.reasoner.fallback = o.fallback;
  cfg.reasoner.stopwords = stopwords_from(o.stopwords);

  std::string payload;
  std::size_t sentences = 0;
  const auto sources = read_sources(o.source_file);
  for (const auto& src : sources) {
    const auto state = generate(src, graph, labeller, realizer, cfg);
    sentences += state.generated_sentences.size();
    payload += generation_to_json(state) + "\n";
  }
  json config = {{"max_sentences", o.max_sentences}, {"window", o.window},       {"max_hops", o.max_hops},
                 {"neighbor_cap", o.neighbor_cap},   {"max_paths", o.max_paths}, {"fallback", o.fallback},
                 {"max_len", o.max_len}};
  json inputs = {{"sources", input_entry(o.source_file)},
                 {"graph", input_entry(o.graph)},
                 {"labeller", input_entry(o.labeller)},
                 {"realizer", input_entry(o.realizer)}};
  ensure_parent(o.out);
  write_file_atomic(o.out, payload);
  write_file_atomic(meta_path(o.out), meta_json("generate", config, inputs));
  std::printf("generated %zu sentences for %zu sources\n", sentences, sources.size());
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const auto report = evaluate(o.generated, o.training, o.references);
  std::fputs(report.to_text().c_str(), stdout);
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_file_atomic(o.out, report.to_json() + "\n");
    json inputs = {{"generated", input_entry(o.generated)},
                   {"training", input_entry(o.training)},
                   {"references", input_entry(o.references)}};
    write_file_atomic(meta_path(o.out), meta_json("evaluate", json::object(), inputs));
  }
  return kOk;
}

int cmd_selfcheck(const Options& o) {
  bool ok = true;
  for (const auto& r : checks::run_all(o.seed)) {
    std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  if (!ok) throw CheckFailure("selfcheck failed");
  return kOk;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Concept-graph reasoning and sentence realization pipeline", "mrg"};
  app.require_subcommand(1, 1);
  Options o;

  auto config_opt = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "flat key=value file of flag defaults");
  };

  auto* bg = app.add_subcommand("build-graph", "build a PMI concept graph from a corpus");
  bg->add_option("--corpus", o.corpus)->required();
  bg->add_option("--out", o.out)->required();
  bg->add_option("--top-k", o.top_k)->check(CLI::PositiveNumber);
  bg->add_option("--vocab-limit", o.vocab_limit)->check(CLI::Range(6, 1 << 30));
  bg->add_option("--stopwords", o.stopwords);
  config_opt(bg);

  auto* ig = app.add_subcommand("import-graph", "import head<TAB>relation<TAB>tail triples");
  ig->add_option("--triples", o.triples)->required();
  ig->add_option("--out", o.out)->required();
  config_opt(ig);

  auto* bd = app.add_subcommand("build-data", "derive labelling and realization datasets");
  bd->add_option("--corpus", o.corpus)->required();
  bd->add_option("--graph", o.graph)->required();
  bd->add_option("--out-labelling", o.out_labelling)->required();
  bd->add_option("--out-realization", o.out_realization)->required();
  bd->add_option("--vocab-out", o.vocab_out, "default: vocab.txt next to --out-labelling");
  bd->add_option("--max-hops", o.max_hops)->check(CLI::PositiveNumber);
  bd->add_option("--neighbor-cap", o.neighbor_cap)->check(CLI::PositiveNumber);
  bd->add_option("--vocab-limit", o.vocab_limit)->check(CLI::Range(6, 1 << 30));
  bd->add_option("--stopwords", o.stopwords);
  config_opt(bd);

  auto* tl = app.add_subcommand("train-labeller", "train the hop labeller");
  tl->add_option("--data", o.data)->required();
  tl->add_option("--out", o.out)->required();
  tl->add_option("--vocab", o.vocab, "default: vocab.txt next to --data");
  o.labeller_train.add(tl);
  o.model.add(tl, false);
  config_opt(tl);

  auto* tr = app.add_subcommand("train-realizer", "train the sentence realizer");
  tr->add_option("--data", o.data)->required();
  tr->add_option("--graph", o.graph)->required();
  tr->add_option("--out", o.out)->required();
  tr->add_option("--vocab", o.vocab, "default: vocab.txt next to --data");
  tr->add_option("--neighbor-cap", o.neighbor_cap, "feature neighbors per target")->check(CLI::PositiveNumber);
  o.realizer_train.add(tr);
  o.model.add(tr, true);
  config_opt(tr);

  auto* gen = app.add_subcommand("generate", "generate texts from source contexts");
  gen->add_option("--source-file", o.source_file)->required();
  gen->add_option("--graph", o.graph)->required();
  gen->add_option("--labeller", o.labeller)->required();
  gen->add_option("--realizer", o.realizer)->required();
  gen->add_option("--out", o.out)->required();
  gen->add_option("--max-sentences", o.max_sentences)->check(CLI::NonNegativeNumber);
  gen->add_option("--window", o.window)->check(CLI::PositiveNumber);
  gen->add_option("--max-hops", o.max_hops)->check(CLI::PositiveNumber);
  gen->add_option("--neighbor-cap", o.neighbor_cap)->check(CLI::PositiveNumber);
  gen->add_option("--max-paths", o.max_paths)->check(CLI::PositiveNumber);
  gen->add_option("--max-len", o.max_len)->check(CLI::PositiveNumber);
  gen->add_flag("--fallback", o.fallback, "promote the best Target candidate when no path closes");
  gen->add_option("--stopwords", o.stopwords);
  config_opt(gen);

  auto* ev = app.add_subcommand("evaluate", "Token, Dist-n, n-gram Jaccard and BLEU-4");
  ev->add_option("--generated", o.generated)->required();
  ev->add_option("--training", o.training)->required();
  ev->add_option("--references", o.references)->required();
  ev->add_option("--out", o.out, "report JSON path");
  config_opt(ev);

  auto* sc = app.add_subcommand("selfcheck", "run gradient, masking and equivariance checks");
  sc->add_option("--seed", o.seed);
  config_opt(sc);

  try {
    inject_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*bg) return cmd_build_graph(o);
    if (*ig) return cmd_import_graph(o);
    if (*bd) return cmd_build_data(o);
    if (*tl) return cmd_train_labeller(o);
    if (*tr) return cmd_train_realizer(o);
    if (*gen) return cmd_generate(o);
    if (*ev) return cmd_evaluate(o);
    if (*sc) return cmd_selfcheck(o);
  } catch (const CheckFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  }
  return kUsage;
}

}  // namespace mrg::cli
