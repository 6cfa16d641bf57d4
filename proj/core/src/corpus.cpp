#include "mrg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "mrg/util.hpp"

namespace mrg {

namespace {

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

// Lenient UTF-8 decoding: an invalid lead byte is passed through as a
// single-byte code point so no input bytes are ever lost.
std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0 && c < 0xF8) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (len > 1) {
      if (i + len > s.size()) {
        len = 1;
        cp = c;
      } else {
        for (std::size_t k = 1; k < len; ++k) {
          auto cc = static_cast<unsigned char>(s[i + k]);
          if ((cc & 0xC0) != 0x80) {
            len = 1;
            cp = c;
            break;
          }
          cp = (cp << 6) | (cc & 0x3F);
        }
      }
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x3000 || c == 0x00A0;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  return (c >= 0x2000 && c <= 0x206F) || (c >= 0x3001 && c <= 0x303F) ||
         (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65);
}

bool is_terminal(char32_t c) {
  return c == U'.' || c == U'!' || c == U'?' || c == 0x3002 || c == 0xFF01 || c == 0xFF1F;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

std::optional<Document> make_document(std::string source, const std::string& target) {
  Document doc;
  doc.source = std::move(source);
  doc.target_sentences = split_sentences(target);
  if (tokenize(doc.source).empty() || doc.target_sentences.empty()) return std::nullopt;
  return doc;
}

}  // namespace

CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  CorpusLoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::optional<Document> doc;
    if (format == CorpusFormat::jsonl) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("source") && j.contains("target") && j["source"].is_string() &&
          j["target"].is_string()) {
        doc = make_document(j["source"].get<std::string>(), j["target"].get<std::string>());
      }
    } else {
      const auto tab = line.find('\t');
      if (tab != std::string::npos) doc = make_document(line.substr(0, tab), line.substr(tab + 1));
    }
    if (doc) {
      result.documents.push_back(std::move(*doc));
    } else {
      ++result.skipped;
      warn(path.string() + ":" + std::to_string(line_no) + ": skipping record without usable source/target");
    }
  }
  if (in.bad()) throw DataError("read failed: " + path.string());
  return result;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  const auto cps = decode_utf8(text);
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!is_terminal(cps[i].value)) continue;
    std::size_t j = i;
    while (j + 1 < cps.size() && is_terminal(cps[j + 1].value)) ++j;
    // ASCII terminals only end a sentence before whitespace or end of text,
    // so "3.5" stays whole. CJK terminals always end one.
    const bool ascii = cps[j].value < 0x80;
    const bool at_boundary = j + 1 == cps.size() || is_space(cps[j + 1].value);
    if (!ascii || at_boundary) flush(cps[j].offset + cps[j].length);
    i = j;
  }
  flush(text.size());
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (const auto& cp : decode_utf8(text)) {
    if (is_space(cp.value)) {
      flush();
    } else if (is_punct(cp.value)) {
      flush();
      out.emplace_back(text.substr(cp.offset, cp.length));
    } else if (cp.value < 0x80) {
      char c = static_cast<char>(cp.value);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      current.append(text.substr(cp.offset, cp.length));
    }
  }
  flush();
  return out;
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  const auto cps = decode_utf8(token);
  return std::all_of(cps.begin(), cps.end(), [](const CodePoint& c) { return is_punct(c.value); });
}

std::vector<std::string> document_sentences(const Document& doc) {
  std::vector<std::string> out;
  out.reserve(doc.target_sentences.size() + 1);
  out.push_back(doc.source);
  out.insert(out.end(), doc.target_sentences.begin(), doc.target_sentences.end());
  return out;
}

// --- Vocabulary ---

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> regular_tokens) {
  tokens_ = {"<pad>", "<unk>", "<sep>", "<bos>", "<eos>"};
  tokens_.reserve(regular_tokens.size() + kNumSpecials);
  for (auto& t : regular_tokens) tokens_.push_back(std::move(t));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
    if (!inserted) throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
  }
}

std::span<const std::string> Vocabulary::regular_tokens() const {
  return std::span<const std::string>(tokens_).subspan(kNumSpecials);
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : regular_tokens()) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> toks;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) toks.emplace_back(line);
    pos = nl + 1;
  }
  try {
    return Vocabulary(std::move(toks));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(read_file(path)); }

Vocabulary build_vocab(std::span<const Document> corpus, std::size_t limit) {
  if (limit <= static_cast<std::size_t>(Vocabulary::kNumSpecials)) {
    throw std::invalid_argument("vocabulary limit must exceed the 5 reserved ids");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& sentence : document_sentences(doc)) {
      for (auto& tok : tokenize(sentence)) ++counts[std::move(tok)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic, so a stable sort on count
  // alone gives the frequency-then-lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), limit - Vocabulary::kNumSpecials);
  std::vector<std::string> toks;
  toks.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    toks.push_back(std::move(ranked[i].first));
  }
  return Vocabulary(std::move(toks));
}

std::vector<std::int32_t> encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

std::vector<std::string> decode(std::span<const std::int32_t> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vocab.token(id));
  return out;
}

}  // namespace mrg
