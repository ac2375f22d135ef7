#pragma once

#include <corver/unicode.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace corver {

using TokenId = uint32_t;

/// Deterministic word-level tokenizer shared by corpus and queries. A word is
/// a maximal run of letters, marks, numbers and connector punctuation;
/// everything else separates words and is dropped.
class WordTokenizer {
 public:
  explicit WordTokenizer(bool lowercase = false) : lowercase_(lowercase) {}

  static std::optional<WordTokenizer> from_id(std::string_view id) {
    if (id == "word-v1") return WordTokenizer(false);
    if (id == "word-v1-lower") return WordTokenizer(true);
    return std::nullopt;
  }

  std::string id() const { return lowercase_ ? "word-v1-lower" : "word-v1"; }
  bool lowercase() const { return lowercase_; }

  std::vector<std::string> words(std::string_view text) const {
    std::vector<std::string> out;
    const std::u32string cps = unicode::decode(text);
    size_t i = 0;
    while (i < cps.size()) {
      if (!unicode::is_word_char(cps[i])) {
        ++i;
        continue;
      }
      size_t j = i;
      while (j < cps.size() && unicode::is_word_char(cps[j])) ++j;
      std::string w = unicode::encode(std::u32string_view(cps).substr(i, j - i));
      out.push_back(lowercase_ ? unicode::lower(w) : std::move(w));
      i = j;
    }
    return out;
  }

 private:
  bool lowercase_;
};

/// Word <-> id table. Ids are assigned in first-seen order.
class Vocabulary {
 public:
  TokenId intern(const std::string& word) {
    auto [it, inserted] = ids_.try_emplace(word, static_cast<TokenId>(words_.size()));
    if (inserted) words_.push_back(word);
    return it->second;
  }

  std::optional<TokenId> find(const std::string& word) const {
    auto it = ids_.find(word);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(TokenId id) const { return words_.at(id); }
  size_t size() const { return words_.size(); }

  /// Sidecar format: header line "corver-vocab 1 <tokenizer-id> <size>", then
  /// one word per line in id order.
  void save(const std::string& path, const std::string& tokenizer_id) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open vocabulary file for writing: " + path);
    out << "corver-vocab 1 " << tokenizer_id << ' ' << words_.size() << '\n';
    for (const auto& w : words_) out << w << '\n';
    if (!out) throw std::runtime_error("failed writing vocabulary file: " + path);
  }

  struct Loaded;
  static Loaded load(const std::string& path);

 private:
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<std::string> words_;
};

struct Vocabulary::Loaded {
  Vocabulary vocab;
  std::string tokenizer_id;
};

inline Vocabulary::Loaded Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  std::string magic, version, tok;
  size_t size = 0;
  in >> magic >> version >> tok >> size;
  if (magic != "corver-vocab" || version != "1")
    throw std::runtime_error("not a corver vocabulary file: " + path);
  std::string line;
  std::getline(in, line);
  Loaded out;
  out.tokenizer_id = tok;
  while (std::getline(in, line)) out.vocab.intern(line);
  if (out.vocab.size() != size)
    throw std::runtime_error("vocabulary file " + path + " declares " + std::to_string(size) +
                             " words but holds " + std::to_string(out.vocab.size()));
  return out;
}

}  // namespace corver
