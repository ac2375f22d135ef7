#pragma once

// Tolerant parsing of triplet-extractor emissions and selection of the
// triplets that feed co-occurrence queries.
//
// The extractor emits bracketed lists: [head, relation, tail] triples,
// [entity, relation] pairs, [] for "no factual content", or a list of several
// triples. Output from a small model is frequently malformed, so the parser
// never fails: smart quotes are folded to ASCII, strings may use either quote
// style with backslash escapes, a quote only closes a string when followed by
// a delimiter, unquoted fields are accepted, and unclosed brackets are closed
// at end of input.

#include <corver/unicode.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace corver {

struct ExtractorItem {
  enum class Kind { Empty, Pair, Triple };
  Kind kind = Kind::Empty;
  std::vector<std::string> fields;

  bool operator==(const ExtractorItem&) const = default;
};

struct ExtractorOutput {
  std::string raw;
  std::vector<ExtractorItem> parsed;
};

struct Triplet {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const Triplet&) const = default;
};

namespace detail {

/// Folds typographic quotes to their ASCII counterparts.
inline std::string fold_quotes(std::string_view raw) {
  std::u32string cps = unicode::decode(raw);
  for (char32_t& c : cps) {
    switch (c) {
      case U'“': case U'”': case U'„': case U'‟': case U'«':
      case U'»': case U'″':
        c = U'"';
        break;
      case U'‘': case U'’': case U'‚': case U'‛': case U'′':
        c = U'\'';
        break;
      default:
        break;
    }
  }
  return unicode::encode(cps);
}

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// A quote closes a string only when the next non-space character is a
/// delimiter or the input ends.
inline bool closes_string(std::string_view s, size_t quote_pos) {
  size_t j = quote_pos + 1;
  while (j < s.size() && is_ascii_space(s[j])) ++j;
  return j == s.size() || s[j] == ',' || s[j] == ']' || s[j] == '[';
}

inline void append_escape(std::string& out, std::string_view s, size_t& i) {
  // s[i] is the character after the backslash
  const char e = s[i];
  switch (e) {
    case 'n': out += '\n'; break;
    case 't': out += '\t'; break;
    case 'r': out += '\r'; break;
    case 'u': {
      if (i + 4 < s.size()) {
        const std::string_view hex = s.substr(i + 1, 4);
        if (std::all_of(hex.begin(), hex.end(), [](char h) {
              return std::isxdigit(static_cast<unsigned char>(h)) != 0;
            })) {
          unicode::append_utf8(out, static_cast<char32_t>(std::stoul(std::string(hex), nullptr, 16)));
          i += 4;
          break;
        }
      }
      out += 'u';
      break;
    }
    default: out += e; break;
  }
}

/// Reads a quoted string starting at s[i] (the opening quote). Leaves i one
/// past the closing quote, or at the end for an unterminated string.
inline std::string read_quoted(std::string_view s, size_t& i) {
  const char q = s[i++];
  std::string out;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      ++i;
      append_escape(out, s, i);
      ++i;
      continue;
    }
    if (c == q && closes_string(s, i)) {
      ++i;
      return out;
    }
    out += c;
    ++i;
  }
  return out;
}

/// Reads an unquoted field up to the next delimiter.
inline std::string read_bare(std::string_view s, size_t& i) {
  std::string out;
  while (i < s.size() && s[i] != ',' && s[i] != '[' && s[i] != ']') out += s[i++];
  return out;
}

inline std::string clean_field(const std::string& f) { return unicode::trim(f); }

struct Node {
  bool is_list = false;
  std::string text;
  std::vector<Node> children;
};

inline void collect_items(const Node& list, bool top_level, std::vector<ExtractorItem>& out) {
  bool has_list = false, has_text = false;
  for (const auto& c : list.children) (c.is_list ? has_list : has_text) = true;
  if (!has_list) {
    const size_t n = list.children.size();
    ExtractorItem item;
    if (n == 0) {
      if (top_level) return;
      item.kind = ExtractorItem::Kind::Empty;
    } else if (n == 2) {
      item.kind = ExtractorItem::Kind::Pair;
    } else if (n == 3) {
      item.kind = ExtractorItem::Kind::Triple;
    } else {
      return;
    }
    for (const auto& c : list.children) item.fields.push_back(c.text);
    out.push_back(std::move(item));
    return;
  }
  for (const auto& c : list.children)
    if (c.is_list) collect_items(c, false, out);
}

}  // namespace detail

/// Best-effort parse; never throws on any input.
inline ExtractorOutput parse_extractor_output(std::string_view raw) {
  ExtractorOutput out;
  out.raw = std::string(raw);
  const std::string s = detail::fold_quotes(raw);

  std::vector<detail::Node> roots;
  std::vector<detail::Node> stack;
  auto close_top = [&] {
    detail::Node done = std::move(stack.back());
    stack.pop_back();
    if (stack.empty()) roots.push_back(std::move(done));
    else stack.back().children.push_back(std::move(done));
  };

  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '[') {
      stack.push_back(detail::Node{true, {}, {}});
      ++i;
    } else if (c == ']') {
      if (!stack.empty()) close_top();
      ++i;
    } else if (c == ',' || detail::is_ascii_space(c)) {
      ++i;
    } else if (stack.empty()) {
      ++i;  // text outside any list
    } else if (c == '"' || c == '\'') {
      std::string f = detail::clean_field(detail::read_quoted(s, i));
      stack.back().children.push_back(detail::Node{false, std::move(f), {}});
    } else {
      std::string f = detail::clean_field(detail::read_bare(s, i));
      if (!f.empty() && f != "null")
        stack.back().children.push_back(detail::Node{false, std::move(f), {}});
    }
  }
  while (!stack.empty()) close_top();

  for (const auto& r : roots) detail::collect_items(r, true, out.parsed);
  return out;
}

inline bool is_pronoun(std::string_view entity) {
  static constexpr std::array<std::string_view, 11> kPronouns{
      "he", "she", "it", "they", "this", "that", "them", "his", "her", "its", "their"};
  const std::string lowered = unicode::lower(unicode::trim(entity));
  return std::find(kPronouns.begin(), kPronouns.end(), lowered) != kPronouns.end();
}

inline std::optional<Triplet> valid_triplet(const ExtractorItem& item) {
  if (item.kind != ExtractorItem::Kind::Triple || item.fields.size() != 3) return std::nullopt;
  Triplet t{unicode::trim(item.fields[0]), unicode::trim(item.fields[1]),
            unicode::trim(item.fields[2])};
  if (t.head.empty() || t.tail.empty() || is_pronoun(t.head) || is_pronoun(t.tail))
    return std::nullopt;
  return t;
}

inline std::vector<Triplet> all_valid_triplets(const ExtractorOutput& out) {
  std::vector<Triplet> result;
  for (const auto& item : out.parsed)
    if (auto t = valid_triplet(item)) result.push_back(std::move(*t));
  return result;
}

inline std::optional<Triplet> first_valid_triplet(const ExtractorOutput& out) {
  for (const auto& item : out.parsed)
    if (auto t = valid_triplet(item)) return t;
  return std::nullopt;
}

}  // namespace corver
