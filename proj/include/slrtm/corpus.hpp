#pragma once

// Raw text -> encoded documents: sentence splitting, tokenization,
// vocabulary with frequency cutoff, EOS handling, label loading.
//
// Encoding conventions:
//   - every encoded sentence ends with exactly one EOS id;
//   - BOS is never emitted into encoded sentences (it only feeds the
//     model as the step-0 input);
//   - out-of-vocabulary tokens map to UNK.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace slrtm {

struct Vocabulary {
  static constexpr const char* kBos = "<bos>";
  static constexpr const char* kEos = "<eos>";
  static constexpr const char* kUnk = "<unk>";

  std::vector<std::string> tokens;           // id -> token
  std::unordered_map<std::string, int> id_of;
  std::vector<std::int64_t> counts;          // id -> training count
  int bos_id = 0;
  int eos_id = 1;
  int unk_id = 2;

  std::size_t size() const { return tokens.size(); }
  // id of token, UNK for unknown
  int lookup(const std::string& token) const;
  // FNV-1a over "token\tcount\n" lines; pins a checkpoint to its vocabulary
  std::uint64_t content_hash() const;
};

struct Sentence {
  std::vector<int> token_ids;  // nonempty, last entry is eos_id
  std::size_t word_count() const { return token_ids.size() - 1; }  // sans EOS
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::vector<int> labels;  // indices into Corpus::label_names; may be empty
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  std::vector<std::string> label_names;

  std::size_t total_sentences() const;
};

struct RawDocument {
  std::string doc_id;
  std::vector<std::string> sentences;  // raw text, pre-split
};

struct TokenizerOptions {
  bool keep_punct = true;  // emit punctuation as single-character tokens
};

// Split at '.', '!' or '?' followed by whitespace and an uppercase letter,
// or at end of text. Trailing unterminated text forms a final sentence.
std::vector<std::string> split_sentences(std::string_view text);

// Lowercased tokens; contiguous letter/digit runs kept whole; punctuation
// emitted as single-character tokens (or dropped when keep_punct is false).
std::vector<std::string> tokenize(std::string_view sentence,
                                  const TokenizerOptions& opts = {});

enum class CorpusLayout {
  directory,     // one document per UTF-8 file
  doc_per_line,  // single file, one document per line
  presplit,      // blank-line-separated documents, one sentence per line
};

std::vector<RawDocument> read_raw_corpus(const std::string& path,
                                         CorpusLayout layout);

// Token kept iff count >= min_count; ids ordered by (count desc, token asc)
// after the three reserved tokens.
Vocabulary build_vocabulary(const std::map<std::string, std::int64_t>& counts,
                            std::int64_t min_count);

std::map<std::string, std::int64_t> count_tokens(
    const std::vector<RawDocument>& docs, const TokenizerOptions& opts = {});

// Tokenize, map OOV to UNK, append EOS. Sentences empty after tokenization
// are dropped; documents left with zero sentences are dropped with a warning
// on stderr.
Corpus encode_corpus(const std::vector<RawDocument>& docs,
                     const Vocabulary& vocab,
                     const TokenizerOptions& opts = {});

// TSV: doc_id, comma-separated label names. Fills Document::labels and
// Corpus::label_names (sorted).
void attach_labels(Corpus& corpus, const std::string& labels_tsv_path);

// One "token<TAB>count" per line, reserved tokens first.
void write_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary read_vocabulary(const std::string& path);

}  // namespace slrtm
