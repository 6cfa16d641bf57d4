#include "mrg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "mrg/corpus.hpp"
#include "mrg/util.hpp"

namespace mrg {

namespace {

std::string ngram_key(const TokenSeq& t, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = start; i < start + n; ++i) {
    if (i > start) key += '\x1f';
    key += t[i];
  }
  return key;
}

std::unordered_set<std::string> ngram_set(const TokenSeq& t, std::size_t n) {
  std::unordered_set<std::string> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out.insert(ngram_key(t, i, n));
  return out;
}

std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSeq& t, std::size_t n) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[ngram_key(t, i, n)];
  return out;
}

void require_order(std::size_t n) {
  if (n == 0) throw std::invalid_argument("n-gram order must be >= 1");
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

CorpusFormat format_for(const std::filesystem::path& p) {
  return p.extension() == ".tsv" ? CorpusFormat::tsv : CorpusFormat::jsonl;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::vector<std::string> load_generated(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> texts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("sentences") && j["sentences"].is_array()) {
      std::vector<std::string> sentences;
      for (const auto& s : j["sentences"]) {
        if (!s.is_string()) throw DataError(path.string() + ":" + std::to_string(lineno) + ": non-string sentence");
        sentences.push_back(s.get<std::string>());
      }
      texts.push_back(join_sentences(sentences));
    } else if (j.contains("target") && j["target"].is_string()) {
      texts.push_back(j["target"].get<std::string>());
    } else {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected \"sentences\" or \"target\"");
    }
  }
  return texts;
}

}  // namespace

std::size_t distinct_ngrams(std::span<const TokenSeq> texts, std::size_t n) {
  require_order(n);
  std::unordered_set<std::string> seen;
  for (const auto& t : texts) {
    for (std::size_t i = 0; i + n <= t.size(); ++i) seen.insert(ngram_key(t, i, n));
  }
  return seen.size();
}

std::size_t total_ngrams(std::span<const TokenSeq> texts, std::size_t n) {
  require_order(n);
  std::size_t total = 0;
  for (const auto& t : texts) total += t.size() >= n ? t.size() - n + 1 : 0;
  return total;
}

double jaccard_novelty(std::span<const TokenSeq> generated, std::span<const TokenSeq> training, std::size_t n) {
  require_order(n);
  if (generated.empty()) throw std::invalid_argument("jaccard_novelty: no generated sentences");
  if (training.empty()) throw std::invalid_argument("jaccard_novelty: no training sentences");

  // Inverted index from n-gram to the training sentences containing it.
  std::unordered_map<std::string, std::vector<std::size_t>> index;
  std::vector<std::size_t> train_sizes(training.size());
  for (std::size_t s = 0; s < training.size(); ++s) {
    const auto set = ngram_set(training[s], n);
    train_sizes[s] = set.size();
    for (const auto& g : set) index[g].push_back(s);
  }

  double sum = 0.0;
  std::vector<std::size_t> overlap(training.size(), 0);
  std::vector<std::size_t> touched;
  for (const auto& sentence : generated) {
    const auto set = ngram_set(sentence, n);
    if (set.empty()) continue;
    touched.clear();
    for (const auto& g : set) {
      auto it = index.find(g);
      if (it == index.end()) continue;
      for (auto s : it->second) {
        if (overlap[s]++ == 0) touched.push_back(s);
      }
    }
    double best = 0.0;
    for (auto s : touched) {
      const double inter = static_cast<double>(overlap[s]);
      best = std::max(best, inter / (static_cast<double>(set.size() + train_sizes[s]) - inter));
      overlap[s] = 0;
    }
    sum += best;
  }
  return sum / static_cast<double>(generated.size());
}

double bleu4(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references) {
  if (candidates.empty()) throw std::invalid_argument("bleu4: no candidates");
  if (candidates.size() != references.size()) throw std::invalid_argument("bleu4: candidate/reference count mismatch");
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto ref = ngram_counts(references[i], n);
      for (const auto& [g, c] : ngram_counts(candidates[i], n)) {
        auto it = ref.find(g);
        matches[n - 1] += it == ref.end() ? 0 : std::min(c, it->second);
        totals[n - 1] += c;
      }
    }
  }
  if (cand_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double p = matches[n] > 0 ? static_cast<double>(matches[n]) / static_cast<double>(totals[n])
                                    : 1.0 / static_cast<double>(totals[n] + 1);
    log_sum += std::log(p) / 4.0;
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum);
}

std::string EvalReport::to_json() const {
  std::string out = "{\"token_count\":" + std::to_string(token_count) + ",\"dist\":{";
  for (std::size_t n = 0; n < 3; ++n) {
    out += (n ? ",\"" : "\"") + std::to_string(n + 1) + "\":" + std::to_string(dist[n]);
  }
  out += "},\"jaccard\":{";
  for (std::size_t n = 0; n < 3; ++n) {
    out += (n ? ",\"" : "\"") + std::to_string(n + 1) + "\":" + fixed4(jaccard[n]);
  }
  out += "},\"bleu4\":" + fixed4(bleu4) + "}";
  return out;
}

std::string EvalReport::to_text() const {
  std::string out;
  out += "Token   " + std::to_string(token_count) + "\n";
  for (std::size_t n = 0; n < 3; ++n) out += "Dist-" + std::to_string(n + 1) + "  " + std::to_string(dist[n]) + "\n";
  static constexpr const char* kNames[3] = {"Uni-J ", "Bi-J  ", "Tri-J "};
  for (std::size_t n = 0; n < 3; ++n) out += std::string(kNames[n]) + "  " + fixed4(jaccard[n]) + "\n";
  out += "BLEU-4  " + fixed4(bleu4) + "\n";
  return out;
}

EvalReport evaluate_texts(std::span<const std::string> generated, std::span<const std::string> training_sentences,
                          std::span<const std::string> references) {
  if (generated.empty()) throw DataError("no generated texts to evaluate");
  std::vector<TokenSeq> gen_tokens;
  std::vector<TokenSeq> gen_sentences;
  for (const auto& text : generated) {
    gen_tokens.push_back(tokenize(text));
    for (const auto& s : split_sentences(text)) gen_sentences.push_back(tokenize(s));
  }
  if (gen_sentences.empty()) throw DataError("generated texts contain no sentences");
  std::vector<TokenSeq> train_tokens;
  for (const auto& s : training_sentences) train_tokens.push_back(tokenize(s));
  std::vector<TokenSeq> ref_tokens;
  for (const auto& r : references) ref_tokens.push_back(tokenize(r));
  if (ref_tokens.size() != gen_tokens.size()) {
    throw DataError("references (" + std::to_string(ref_tokens.size()) + ") and generated texts (" +
                    std::to_string(gen_tokens.size()) + ") differ in count");
  }

  EvalReport r;
  for (const auto& t : gen_tokens) r.token_count += t.size();
  for (std::size_t n = 1; n <= 3; ++n) {
    r.dist[n - 1] = distinct_ngrams(gen_tokens, n);
    r.jaccard[n - 1] = jaccard_novelty(gen_sentences, train_tokens, n);
  }
  r.bleu4 = bleu4(gen_tokens, ref_tokens);
  return r;
}

EvalReport evaluate(const std::filesystem::path& generated_path, const std::filesystem::path& training_path,
                    const std::filesystem::path& references_path) {
  const auto generated = load_generated(generated_path);
  const auto training = load_corpus(training_path, format_for(training_path));
  std::vector<std::string> training_sentences;
  for (const auto& doc : training.documents) {
    for (auto& s : document_sentences(doc)) training_sentences.push_back(std::move(s));
  }
  if (training_sentences.empty()) throw DataError("training corpus is empty: " + training_path.string());
  const auto refs = load_corpus(references_path, format_for(references_path));
  std::vector<std::string> references;
  for (const auto& doc : refs.documents) references.push_back(join_sentences(doc.target_sentences));
  return evaluate_texts(generated, training_sentences, references);
}

}  // namespace mrg
