#include "slrtm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slrtm/errors.hpp"

namespace slrtm {

namespace {

bool is_ascii_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_word_byte(unsigned char c) {
  // Letters, digits, and any non-ASCII UTF-8 byte stay inside a token.
  return std::isalnum(c) != 0 || c >= 0x80;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

int Vocabulary::lookup(const std::string& token) const {
  auto it = id_of.find(token);
  return it == id_of.end() ? unk_id : it->second;
}

std::uint64_t Vocabulary::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    mix(tokens[i]);
    mix("\t");
    mix(std::to_string(counts[i]));
    mix("\n");
  }
  return h;
}

std::size_t Corpus::total_sentences() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.sentences.size();
  return n;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    // Scan past whitespace; boundary if end of text or an uppercase letter.
    std::size_t j = i + 1;
    while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const bool at_end = j == n;
    if (j == i + 1 && !at_end) continue;  // terminator not followed by space
    if (at_end || is_ascii_upper(static_cast<unsigned char>(text[j]))) {
      std::string s = trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = j;
      i = j - 1;
    }
  }
  if (start < n) {
    std::string s = trim(text.substr(start));
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view sentence,
                                  const TokenizerOptions& opts) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : sentence) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      if (!std::isspace(c) && opts.keep_punct)
        out.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  flush();
  return out;
}

std::vector<RawDocument> read_raw_corpus(const std::string& path,
                                         CorpusLayout layout) {
  namespace fs = std::filesystem;
  std::vector<RawDocument> docs;

  if (layout == CorpusLayout::directory) {
    if (!fs::is_directory(path))
      throw IoError("corpus directory not found: " + path);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      RawDocument d;
      d.doc_id = fs::path(f).filename().string();
      d.sentences = split_sentences(read_file(f));
      docs.push_back(std::move(d));
    }
    return docs;
  }

  if (!fs::is_regular_file(path)) throw IoError("corpus file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);

  std::string line;
  if (layout == CorpusLayout::doc_per_line) {
    std::size_t idx = 0;
    while (std::getline(in, line)) {
      ++idx;
      std::string t = trim(line);
      if (t.empty()) continue;
      RawDocument d;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "doc%06zu", idx);
      d.doc_id = buf;
      d.sentences = split_sentences(t);
      docs.push_back(std::move(d));
    }
    return docs;
  }

  // presplit: blank-line-separated documents, one sentence per line
  RawDocument cur;
  std::size_t idx = 0;
  auto flush_doc = [&] {
    if (!cur.sentences.empty()) {
      ++idx;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "doc%06zu", idx);
      cur.doc_id = buf;
      docs.push_back(std::move(cur));
      cur = RawDocument{};
    }
  };
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) {
      flush_doc();
    } else {
      cur.sentences.push_back(std::move(t));
    }
  }
  flush_doc();
  return docs;
}

std::map<std::string, std::int64_t> count_tokens(
    const std::vector<RawDocument>& docs, const TokenizerOptions& opts) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& d : docs)
    for (const auto& s : d.sentences)
      for (auto& t : tokenize(s, opts)) ++counts[t];
  return counts;
}

Vocabulary build_vocabulary(const std::map<std::string, std::int64_t>& counts,
                            std::int64_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  Vocabulary v;
  v.tokens = {Vocabulary::kBos, Vocabulary::kEos, Vocabulary::kUnk};
  v.counts = {0, 0, 0};

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, cnt] : counts)
    if (cnt >= min_count) kept.emplace_back(tok, cnt);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, cnt] : kept) {
    v.tokens.push_back(tok);
    v.counts.push_back(cnt);
  }
  for (std::size_t i = 0; i < v.tokens.size(); ++i)
    v.id_of[v.tokens[i]] = static_cast<int>(i);
  return v;
}

Corpus encode_corpus(const std::vector<RawDocument>& docs,
                     const Vocabulary& vocab, const TokenizerOptions& opts) {
  Corpus c;
  c.vocabulary = vocab;
  for (const auto& rd : docs) {
    Document d;
    d.doc_id = rd.doc_id;
    for (const auto& raw : rd.sentences) {
      auto toks = tokenize(raw, opts);
      if (toks.empty()) continue;
      Sentence s;
      s.token_ids.reserve(toks.size() + 1);
      for (const auto& t : toks) s.token_ids.push_back(vocab.lookup(t));
      s.token_ids.push_back(vocab.eos_id);
      d.sentences.push_back(std::move(s));
    }
    if (d.sentences.empty()) {
      std::cerr << "warning: dropping empty document " << rd.doc_id << "\n";
      continue;
    }
    c.documents.push_back(std::move(d));
  }
  return c;
}

void attach_labels(Corpus& corpus, const std::string& labels_tsv_path) {
  std::ifstream in(labels_tsv_path);
  if (!in) throw IoError("cannot open labels file: " + labels_tsv_path);

  std::unordered_map<std::string, std::vector<std::string>> by_doc;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError("labels file: missing tab separator: " + line);
    std::string doc_id = trim(line.substr(0, tab));
    std::string rest = line.substr(tab + 1);
    std::vector<std::string> names;
    std::stringstream ss(rest);
    std::string part;
    while (std::getline(ss, part, ',')) {
      std::string t = trim(part);
      if (!t.empty()) names.push_back(std::move(t));
    }
    by_doc[doc_id] = std::move(names);
  }

  std::map<std::string, int> name_id;
  for (const auto& [_, names] : by_doc)
    for (const auto& n : names) name_id.emplace(n, 0);
  corpus.label_names.clear();
  for (auto& [n, id] : name_id) {
    id = static_cast<int>(corpus.label_names.size());
    corpus.label_names.push_back(n);
  }

  for (auto& d : corpus.documents) {
    d.labels.clear();
    auto it = by_doc.find(d.doc_id);
    if (it == by_doc.end()) continue;
    for (const auto& n : it->second) d.labels.push_back(name_id.at(n));
    std::sort(d.labels.begin(), d.labels.end());
  }
}

void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file: " + path);
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i)
    out << vocab.tokens[i] << '\t' << vocab.counts[i] << '\n';
}

Vocabulary read_vocabulary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError("vocabulary file: bad line: " + line);
    v.tokens.push_back(line.substr(0, tab));
    v.counts.push_back(std::stoll(line.substr(tab + 1)));
  }
  if (v.tokens.size() < 3 || v.tokens[0] != Vocabulary::kBos ||
      v.tokens[1] != Vocabulary::kEos || v.tokens[2] != Vocabulary::kUnk)
    throw IoError("vocabulary file: reserved tokens missing or misordered");
  for (std::size_t i = 0; i < v.tokens.size(); ++i)
    v.id_of[v.tokens[i]] = static_cast<int>(i);
  return v;
}

}  // namespace slrtm
