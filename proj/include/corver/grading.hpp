#pragma once

// Lenient string-match grading, answer extraction and the format reward.

#include <corver/unicode.hpp>

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace corver {

struct GoldAnswers {
  std::string primary;
  std::vector<std::string> aliases;

  /// Semicolon-joined form: first entry is the primary answer.
  static GoldAnswers from_joined(std::string_view joined) {
    std::vector<std::string> parts;
    size_t pos = 0;
    while (pos <= joined.size()) {
      size_t end = joined.find(';', pos);
      if (end == std::string_view::npos) end = joined.size();
      std::string p = unicode::trim(joined.substr(pos, end - pos));
      if (!p.empty()) parts.push_back(std::move(p));
      pos = end + 1;
    }
    return from_list(std::move(parts));
  }

  static GoldAnswers from_list(std::vector<std::string> answers) {
    if (answers.empty() || answers.front().empty())
      throw std::invalid_argument("gold answers need a non-empty primary answer");
    GoldAnswers g;
    g.primary = std::move(answers.front());
    g.aliases.assign(std::make_move_iterator(answers.begin() + 1),
                     std::make_move_iterator(answers.end()));
    return g;
  }
};

enum class JudgeLabel { Good, Bad, NA };

inline const char* to_string(JudgeLabel l) {
  switch (l) {
    case JudgeLabel::Good: return "GOOD";
    case JudgeLabel::Bad: return "BAD";
    case JudgeLabel::NA: return "NA";
  }
  return "?";
}

struct JudgeRewards {
  double good = 2.0;
  double bad = -1.0;
  double na = -1.0;

  double operator[](JudgeLabel l) const {
    return l == JudgeLabel::Good ? good : l == JudgeLabel::Bad ? bad : na;
  }
};

struct JudgeVerdict {
  JudgeLabel label = JudgeLabel::NA;
  double reward = 0.0;
};

enum class FormatRule { None, MissingTags, ThinkTooShort, ThinkNoAlpha, ThinkStartsWithLt };

inline const char* to_string(FormatRule r) {
  switch (r) {
    case FormatRule::None: return "none";
    case FormatRule::MissingTags: return "missing_tags";
    case FormatRule::ThinkTooShort: return "think_too_short";
    case FormatRule::ThinkNoAlpha: return "think_no_alpha";
    case FormatRule::ThinkStartsWithLt: return "think_starts_with_lt";
  }
  return "?";
}

struct FormatRewards {
  double ok = 1.0;
  double fail = -1.0;
};

struct FormatVerdict {
  bool ok = false;
  double reward = 0.0;
  FormatRule violated_rule = FormatRule::MissingTags;
};

/// NFKD, drop nonspacing marks, lowercase, trim, blank out stand-alone
/// articles, blank out non-word punctuation, collapse whitespace.
inline std::string normalize(std::string_view text) {
  std::u32string s = unicode::decode(unicode::nfkd(text));
  s.erase(std::remove_if(s.begin(), s.end(), unicode::is_nonspacing_mark), s.end());
  s = unicode::decode(unicode::lower(unicode::encode(s)));
  s = std::u32string(unicode::trim(s));

  auto word_at = [&](size_t i) { return i < s.size() && unicode::is_word_char(s[i]); };
  for (size_t i = 0; i < s.size();) {
    if (!word_at(i) || (i > 0 && word_at(i - 1))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (word_at(j)) ++j;
    const std::u32string_view w(s.data() + i, j - i);
    if (w == U"a" || w == U"an" || w == U"the") std::fill(s.begin() + i, s.begin() + j, U' ');
    i = j;
  }

  std::u32string out;
  bool pending_space = false;
  for (char32_t c : s) {
    if (unicode::is_space(c) || !unicode::is_word_char(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return unicode::encode(out);
}

inline bool is_refusal(std::string_view prediction) {
  static constexpr std::array<std::string_view, 3> kRefusals{"", "i don't know", "i do not know"};
  const std::string ls = unicode::trim(unicode::lower(prediction));
  return std::find(kRefusals.begin(), kRefusals.end(), ls) != kRefusals.end();
}

/// Normalized forms are equal or one contains the other. An empty normalized
/// form never matches.
inline bool lenient_match(std::string_view prediction, std::string_view gold) {
  const std::string p = normalize(prediction), g = normalize(gold);
  if (p.empty() || g.empty()) return false;
  return p == g || p.find(g) != std::string::npos || g.find(p) != std::string::npos;
}

inline JudgeVerdict judge(std::string_view prediction, const GoldAnswers& gold,
                          const JudgeRewards& rewards = {}) {
  JudgeLabel label = JudgeLabel::Bad;
  if (is_refusal(prediction)) {
    label = JudgeLabel::NA;
  } else if (lenient_match(prediction, gold.primary) ||
             std::any_of(gold.aliases.begin(), gold.aliases.end(),
                         [&](const std::string& a) { return lenient_match(prediction, a); })) {
    label = JudgeLabel::Good;
  }
  return {label, rewards[label]};
}

/// Text after the first <answer>, up to </answer> or end of text, trimmed.
/// Empty when there is no <answer> tag.
inline std::string extract_answer(std::string_view completion) {
  const size_t open = completion.find("<answer>");
  if (open == std::string_view::npos) return {};
  const size_t start = open + 8;
  const size_t close = completion.find("</answer>", start);
  const size_t end = close == std::string_view::npos ? completion.size() : close;
  return unicode::trim(completion.substr(start, end - start));
}

/// Requires <think>...</think>...<answer> in order, and think content of at
/// least 30 characters (after trimming) containing a letter and not starting
/// with '<'. The first violated rule is reported.
inline FormatVerdict format_reward(std::string_view completion, const FormatRewards& rewards = {}) {
  auto fail = [&](FormatRule r) { return FormatVerdict{false, rewards.fail, r}; };
  const size_t open = completion.find("<think>");
  if (open == std::string_view::npos) return fail(FormatRule::MissingTags);
  const size_t body = open + 7;
  const size_t close = completion.find("</think>", body);
  if (close == std::string_view::npos) return fail(FormatRule::MissingTags);
  if (completion.find("<answer>", close + 8) == std::string_view::npos)
    return fail(FormatRule::MissingTags);

  const std::u32string think = unicode::decode(completion.substr(body, close - body));
  const std::u32string_view content = unicode::trim(think);
  if (content.size() < 30) return fail(FormatRule::ThinkTooShort);
  if (std::none_of(content.begin(), content.end(), unicode::is_alphabetic))
    return fail(FormatRule::ThinkNoAlpha);
  if (content.front() == U'<') return fail(FormatRule::ThinkStartsWithLt);
  return {true, rewards.ok, FormatRule::None};
}

}  // namespace corver
