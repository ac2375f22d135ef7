#pragma once

// Text-level face of the index: a CorpusIndex plus the vocabulary and
// tokenizer that produced it. The vocabulary lives in a sidecar file next to
// the index image (<index>.vocab).

#include <corver/corpus_index.hpp>
#include <corver/tokenizer.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace corver {

/// Accumulates documents into a Corpus, interning words as it goes.
class CorpusBuilder {
 public:
  explicit CorpusBuilder(WordTokenizer tokenizer = WordTokenizer{}) : tokenizer_(tokenizer) {
    corpus_.doc_bounds.clear();
  }

  void add_document(std::string_view text) {
    const auto words = tokenizer_.words(text);
    if (words.empty()) return;
    corpus_.doc_bounds.push_back(corpus_.tokens.size());
    for (const auto& w : words) corpus_.tokens.push_back(vocab_.intern(w));
  }

  /// Plain text: documents separated by blank lines. JSONL: one {"text": ...}
  /// object per line. JSONL is detected by a .jsonl suffix.
  void add_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    const bool jsonl = path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl";
    std::string line;
    size_t lineno = 0;
    if (jsonl) {
      while (std::getline(in, line)) {
        ++lineno;
        if (unicode::trim(line).empty()) continue;
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": expected an object with a string \"text\" field");
        add_document(j["text"].get<std::string>());
      }
      return;
    }
    std::string doc;
    while (std::getline(in, line)) {
      if (unicode::trim(line).empty()) {
        add_document(doc);
        doc.clear();
      } else {
        doc += line;
        doc += '\n';
      }
    }
    add_document(doc);
  }

  Corpus corpus() const {
    Corpus c = corpus_;
    c.vocab_meta = {tokenizer_.id(), vocab_.size()};
    return c;
  }
  const Vocabulary& vocabulary() const { return vocab_; }
  const WordTokenizer& tokenizer() const { return tokenizer_; }

 private:
  WordTokenizer tokenizer_;
  Vocabulary vocab_;
  Corpus corpus_;
};

class TextIndex {
 public:
  TextIndex(CorpusIndex index, Vocabulary vocab, WordTokenizer tokenizer)
      : index_(std::move(index)), vocab_(std::move(vocab)), tokenizer_(tokenizer) {
    check_consistent();
  }

  static TextIndex build(const CorpusBuilder& builder, IndexParams params) {
    params.token_width = IndexParams::width_for_vocab(builder.vocabulary().size());
    return TextIndex(build_index(builder.corpus(), params), builder.vocabulary(),
                     builder.tokenizer());
  }

  static std::string vocab_path(const std::string& index_path) { return index_path + ".vocab"; }

  void save(const std::string& path) const {
    index_.save(path);
    vocab_.save(vocab_path(path), tokenizer_.id());
  }

  static TextIndex load(const std::string& path) {
    CorpusIndex idx = CorpusIndex::load(path);
    auto loaded = Vocabulary::load(vocab_path(path));
    auto tok = WordTokenizer::from_id(loaded.tokenizer_id);
    if (!tok) throw std::runtime_error("unknown tokenizer id in vocabulary: " + loaded.tokenizer_id);
    return TextIndex(std::move(idx), std::move(loaded.vocab), *tok);
  }

  /// Tokenizes a phrase into a clause. Words missing from the vocabulary make
  /// the clause unmatchable, reported as nullopt.
  std::optional<Clause> clause(std::string_view phrase) const {
    Clause c;
    for (const auto& w : tokenizer_.words(phrase)) {
      auto id = vocab_.find(w);
      if (!id) return std::nullopt;
      c.push_back(*id);
    }
    return c;
  }

  const CorpusIndex& index() const { return index_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const WordTokenizer& tokenizer() const { return tokenizer_; }

 private:
  void check_consistent() const {
    const VocabMeta& meta = index_.vocab_meta();
    if (meta.tokenizer_id != tokenizer_.id())
      throw std::runtime_error("index was built with tokenizer '" + meta.tokenizer_id +
                               "' but queries use '" + tokenizer_.id() + "'");
    if (meta.vocab_size != vocab_.size())
      throw std::runtime_error("index vocabulary size " + std::to_string(meta.vocab_size) +
                               " does not match vocabulary file size " +
                               std::to_string(vocab_.size()));
  }

  CorpusIndex index_;
  Vocabulary vocab_;
  WordTokenizer tokenizer_;
};

}  // namespace corver
