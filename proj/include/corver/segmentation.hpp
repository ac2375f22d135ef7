#pragma once

// Sentence segmentation of think/answer completions and the token-to-sentence
// alignment. All offsets are code-point indices into the original text.

#include <corver/unicode.hpp>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace corver {

enum class Block { Think, Answer };

inline const char* to_string(Block b) { return b == Block::Think ? "think" : "answer"; }

struct CharSpan {
  size_t start = 0;
  size_t end = 0;

  bool operator==(const CharSpan&) const = default;
};

struct SentenceSpan {
  size_t index = 0;  // 1-based
  size_t start = 0;
  size_t end = 0;
  Block block = Block::Answer;

  bool operator==(const SentenceSpan&) const = default;
};

struct Completion {
  std::string text;
  std::vector<CharSpan> token_spans;
  std::vector<bool> mask;
};

struct Alignment {
  std::vector<size_t> sigma;
  double rate = 0.0;
  bool fallback = true;
  size_t aligned = 0;     // masked tokens with sigma > 0
  size_t considered = 0;  // masked tokens not sitting on tag markup
};

namespace detail {

inline constexpr std::u32string_view kThinkOpen = U"<think>";
inline constexpr std::u32string_view kThinkClose = U"</think>";
inline constexpr std::u32string_view kAnswerOpen = U"<answer>";
inline constexpr std::u32string_view kAnswerClose = U"</answer>";

struct BlockSpan {
  size_t start = 0;
  size_t end = 0;
  Block block = Block::Answer;
};

struct Layout {
  std::vector<BlockSpan> blocks;
  std::vector<CharSpan> tags;
};

/// Locates the think and answer blocks. The think block runs to </think>, or
/// to <answer> / end of text when unclosed; the answer block runs to
/// </answer> or end of text. Text without either tag is one answer block.
inline Layout layout(std::u32string_view text) {
  Layout out;
  constexpr auto npos = std::u32string_view::npos;
  size_t cursor = 0;
  const size_t think_open = text.find(kThinkOpen);
  if (think_open != npos) {
    const size_t start = think_open + kThinkOpen.size();
    out.tags.push_back({think_open, start});
    size_t end = text.find(kThinkClose, start);
    if (end != npos) {
      out.tags.push_back({end, end + kThinkClose.size()});
      cursor = end + kThinkClose.size();
    } else {
      end = std::min(text.find(kAnswerOpen, start), text.size());
      cursor = end;
    }
    out.blocks.push_back({start, end, Block::Think});
  }
  const size_t answer_open = text.find(kAnswerOpen, cursor);
  if (answer_open != npos) {
    const size_t start = answer_open + kAnswerOpen.size();
    out.tags.push_back({answer_open, start});
    size_t end = text.find(kAnswerClose, start);
    if (end != npos) out.tags.push_back({end, end + kAnswerClose.size()});
    else end = text.size();
    out.blocks.push_back({start, end, Block::Answer});
  }
  if (think_open == npos && answer_open == npos) out.blocks.push_back({0, text.size(), Block::Answer});
  return out;
}

inline bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

}  // namespace detail

/// Splits both blocks at runs of . ! ? followed by whitespace or block end.
/// Sentence numbering is continuous across blocks; whitespace between
/// sentences belongs to no sentence.
inline std::vector<SentenceSpan> split_sentences(std::u32string_view text) {
  std::vector<SentenceSpan> out;
  for (const auto& b : detail::layout(text).blocks) {
    size_t i = b.start;
    while (i < b.end) {
      while (i < b.end && unicode::is_space(text[i])) ++i;
      if (i >= b.end) break;
      const size_t start = i;
      size_t end = b.end;
      while (i < b.end) {
        if (detail::is_terminator(text[i])) {
          size_t j = i;
          while (j < b.end && detail::is_terminator(text[j])) ++j;
          if (j == b.end || unicode::is_space(text[j])) {
            end = j;
            i = j;
            break;
          }
          i = j;
        } else {
          ++i;
        }
      }
      if (end == b.end) {
        while (end > start && unicode::is_space(text[end - 1])) --end;
        i = b.end;
      }
      out.push_back({out.size() + 1, start, end, b.block});
    }
  }
  return out;
}

inline std::vector<SentenceSpan> split_sentences(std::string_view text) {
  return split_sentences(std::u32string_view(unicode::decode(text)));
}

/// Code-point substring of a sentence.
inline std::string sentence_text(std::u32string_view text, const SentenceSpan& s) {
  return unicode::encode(text.substr(s.start, s.end - s.start));
}

/// Assigns each masked token to the sentence containing its midpoint
/// floor((start+end)/2), with spans closed-open. Tokens whose midpoint sits
/// on tag markup are structural and excluded from the alignment rate; the
/// rate is aligned / considered, and fallback fires when it drops below the
/// threshold (or nothing could be considered).
inline Alignment align_tokens(const Completion& completion,
                              const std::vector<SentenceSpan>& sentences,
                              double fallback_threshold) {
  const std::u32string text = unicode::decode(completion.text);
  const size_t n = completion.token_spans.size();
  if (completion.mask.size() != n)
    throw std::invalid_argument("mask length " + std::to_string(completion.mask.size()) +
                                " does not match token count " + std::to_string(n));
  for (size_t t = 0; t < n; ++t) {
    const auto& sp = completion.token_spans[t];
    if (sp.start > sp.end || sp.end > text.size())
      throw std::invalid_argument("token " + std::to_string(t) + " span [" +
                                  std::to_string(sp.start) + ", " + std::to_string(sp.end) +
                                  ") outside text of length " + std::to_string(text.size()));
    if (t > 0 && sp.start < completion.token_spans[t - 1].end)
      throw std::invalid_argument("token spans overlap or are out of order at token " +
                                  std::to_string(t));
  }
  for (size_t i = 1; i < sentences.size(); ++i)
    if (sentences[i].start < sentences[i - 1].end)
      throw std::invalid_argument("sentence spans overlap or are out of order");

  const auto tags = detail::layout(text).tags;
  auto on_tag = [&](size_t mid) {
    return std::any_of(tags.begin(), tags.end(),
                       [&](const CharSpan& s) { return s.start <= mid && mid < s.end; });
  };

  Alignment a;
  a.sigma.assign(n, 0);
  for (size_t t = 0; t < n; ++t) {
    if (!completion.mask[t]) continue;
    const auto& sp = completion.token_spans[t];
    const size_t mid = (sp.start + sp.end) / 2;
    auto it = std::upper_bound(sentences.begin(), sentences.end(), mid,
                               [](size_t m, const SentenceSpan& s) { return m < s.start; });
    if (it != sentences.begin() && mid < std::prev(it)->end) {
      a.sigma[t] = std::prev(it)->index;
      ++a.aligned;
      ++a.considered;
    } else if (!on_tag(mid)) {
      ++a.considered;
    }
  }
  a.rate = a.considered == 0 ? 0.0
                             : static_cast<double>(a.aligned) / static_cast<double>(a.considered);
  a.fallback = a.considered == 0 || a.rate < fallback_threshold;
  return a;
}

}  // namespace corver
