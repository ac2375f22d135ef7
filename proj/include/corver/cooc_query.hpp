#pragma once

// Reduction of triplet entities to the content words of a co-occurrence query.

#include <corver/unicode.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace corver {

/// Closed-class words removed before querying. Always exactly 35 lowercase
/// entries; membership tests are case-insensitive.
class StopWordList {
 public:
  static constexpr size_t kSize = 35;

  explicit StopWordList(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.size() != kSize)
      throw std::invalid_argument("stop-word list must hold exactly 35 words, got " +
                                  std::to_string(words_.size()));
    for (const auto& w : words_)
      if (w.empty() || unicode::lower(w) != w)
        throw std::invalid_argument("stop word '" + w + "' is not a non-empty lowercase token");
    std::sort(words_.begin(), words_.end());
    if (std::adjacent_find(words_.begin(), words_.end()) != words_.end())
      throw std::invalid_argument("stop-word list contains duplicates");
  }

  /// The list shipped in data/stopwords.txt.
  static StopWordList defaults() {
    return StopWordList({"a",    "an",   "the",   "it",   "of",   "in",  "on",   "at",  "to",
                         "for",  "from", "by",    "with", "as",   "into", "about", "is", "are",
                         "was",  "were", "be",    "been", "being", "has", "have", "had", "do",
                         "does", "did",  "and",   "or",   "but",  "if",  "nor",  "so"});
  }

  /// One word per line, UTF-8.
  static StopWordList from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open stop-word file: " + path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      std::string w = unicode::trim(line);
      if (!w.empty()) words.push_back(std::move(w));
    }
    return StopWordList(std::move(words));
  }

  bool contains(std::string_view word) const {
    return std::binary_search(words_.begin(), words_.end(), unicode::lower(word));
  }

  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
};

struct WordQuery {
  enum class Source { HeadTail, HeadTailRelation };
  std::vector<std::string> words;
  Source source = Source::HeadTail;

  bool operator==(const WordQuery&) const = default;
};

namespace detail {

inline std::string strip_edge_punctuation(std::string_view word) {
  std::u32string cps = unicode::decode(word);
  size_t b = 0, e = cps.size();
  while (b < e && unicode::is_punctuation(cps[b])) ++b;
  while (e > b && unicode::is_punctuation(cps[e - 1])) --e;
  return unicode::encode(std::u32string_view(cps).substr(b, e - b));
}

inline std::vector<std::string> surface_words(std::string_view text) {
  std::vector<std::string> out;
  const std::u32string cps = unicode::decode(text);
  size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && unicode::is_space(cps[i])) ++i;
    size_t j = i;
    while (j < cps.size() && !unicode::is_space(cps[j])) ++j;
    if (j > i) {
      std::string w = strip_edge_punctuation(unicode::encode(std::u32string_view(cps).substr(i, j - i)));
      if (!w.empty()) out.push_back(std::move(w));
    }
    i = j;
  }
  return out;
}

}  // namespace detail

/// Content words of one entity: its capitalized non-stop words, or failing
/// that, its non-stop words longer than two characters.
inline std::vector<std::string> content_words(std::string_view entity, const StopWordList& stops) {
  std::vector<std::string> capitalized, long_words;
  for (auto& w : detail::surface_words(entity)) {
    if (stops.contains(w)) continue;
    const std::u32string cps = unicode::decode(w);
    if (unicode::is_upper_initial(cps.front())) capitalized.push_back(w);
    if (cps.size() > 2) long_words.push_back(std::move(w));
  }
  return capitalized.empty() ? long_words : capitalized;
}

namespace detail {

inline void append_unique(std::vector<std::string>& into, const std::vector<std::string>& words) {
  for (const auto& w : words)
    if (std::find(into.begin(), into.end(), w) == into.end()) into.push_back(w);
}

}  // namespace detail

/// Head words then tail words, deduplicated in first-occurrence order. Fewer
/// than two surviving words means no query (neutral reward downstream).
inline std::optional<WordQuery> build_entity_query(std::string_view head, std::string_view tail,
                                                   const StopWordList& stops) {
  WordQuery q;
  detail::append_unique(q.words, content_words(head, stops));
  detail::append_unique(q.words, content_words(tail, stops));
  if (q.words.size() < 2) return std::nullopt;
  return q;
}

/// Appends the relation's content words. nullopt when the relation adds no
/// new word, in which case the caller skips the relation check.
inline std::optional<WordQuery> build_relation_query(const WordQuery& base,
                                                     std::string_view relation,
                                                     const StopWordList& stops) {
  WordQuery q = base;
  detail::append_unique(q.words, content_words(relation, stops));
  if (q.words.size() == base.words.size()) return std::nullopt;
  q.source = WordQuery::Source::HeadTailRelation;
  return q;
}

}  // namespace corver
