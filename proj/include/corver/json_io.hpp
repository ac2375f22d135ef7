#pragma once

// JSON mapping for the wire and file formats. Doubles are written in
// shortest round-trip form, so values survive serialization bit-exactly.

#include <corver/data_pipeline.hpp>
#include <corver/grading.hpp>
#include <corver/returns.hpp>
#include <corver/reward.hpp>
#include <corver/segmentation.hpp>

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace corver {

using json = nlohmann::json;

/// Input that fails a format contract. Carries the offending field path.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

template <class T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + ": " + e.what());
  }
}

}  // namespace detail

// ---- output ---------------------------------------------------------------

inline json to_json(const CnfCount& c) {
  return {{"count", c.count}, {"truncated", c.truncated}, {"anchor_clause", c.anchor_clause}};
}

inline json to_json(const Triplet& t) {
  return {{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}};
}

inline json to_json(const WordQuery& q) {
  return {{"words", q.words},
          {"source", q.source == WordQuery::Source::HeadTail ? "head_tail" : "head_tail_relation"}};
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? to_json(*v) : json(nullptr);
}

inline json to_json(const SentenceScore& s) {
  return {{"sentence_index", s.sentence_index},
          {"triplet", optional_json(s.triplet)},
          {"query", optional_json(s.query)},
          {"count", optional_json(s.count)},
          {"reward", s.reward},
          {"variant", to_string(s.variant)},
          {"relcheck_demoted", s.relcheck_demoted},
          {"stage", s.stage},
          {"queries_issued", s.queries_issued},
          {"triplet_counts", s.triplet_counts},
          {"relation_count", optional_json(s.relation_count)}};
}

inline json to_json(const SentenceSpan& s, std::u32string_view text) {
  return {{"index", s.index},
          {"start", s.start},
          {"end", s.end},
          {"block", to_string(s.block)},
          {"text", sentence_text(text, s)}};
}

inline json to_json(const Alignment& a) {
  return {{"sigma", a.sigma},
          {"rate", a.rate},
          {"fallback", a.fallback},
          {"aligned", a.aligned},
          {"considered", a.considered}};
}

inline json to_json(const JudgeVerdict& v) {
  return {{"label", to_string(v.label)}, {"reward", v.reward}};
}

inline json to_json(const FormatVerdict& v) {
  return {{"ok", v.ok}, {"reward", v.reward}, {"violated_rule", to_string(v.violated_rule)}};
}

inline json to_json(const CompletionScore& c, std::string_view text) {
  const std::u32string cps = unicode::decode(text);
  json sentences = json::array();
  for (const auto& s : c.sentences) sentences.push_back(to_json(s, cps));
  json scores = json::array();
  for (const auto& s : c.sentence_scores) scores.push_back(to_json(s));
  return {{"prediction", c.prediction},
          {"judge", to_json(c.judge)},
          {"format", to_json(c.format)},
          {"response_return", c.response_return},
          {"sentences", std::move(sentences)},
          {"sentence_scores", std::move(scores)},
          {"alignment", to_json(c.alignment)},
          {"token_returns", c.token_returns}};
}

/// Per-completion summary used in group diagnostics.
inline json diagnostics_json(const CompletionScore& c) {
  json scores = json::array();
  for (const auto& s : c.sentence_scores) scores.push_back(to_json(s));
  return {{"label", to_string(c.judge.label)},
          {"judge_reward", c.judge.reward},
          {"format_ok", c.format.ok},
          {"violated_rule", to_string(c.format.violated_rule)},
          {"response_return", c.response_return},
          {"alignment_rate", c.alignment.rate},
          {"fallback", c.alignment.fallback},
          {"sentence_scores", std::move(scores)}};
}

inline json to_json(const GroupAdvantages& g) {
  return {{"advantages", g.advantages},
          {"completion_means", g.completion_means},
          {"baseline", g.baseline},
          {"scale", g.scale},
          {"epsilon", g.epsilon}};
}

inline json to_json(const CalibrationBucket& b) {
  return {{"lower", b.lower},
          {"upper", b.upper ? json(*b.upper) : json(nullptr)},
          {"n", b.n},
          {"correct", b.correct},
          {"precision", b.precision},
          {"ci_low", b.ci_low},
          {"ci_high", b.ci_high}};
}

inline json to_json(const ZoneSummary& z) {
  return {{"never", z.never}, {"learning", z.learning}, {"mastered", z.mastered}, {"total", z.total()}};
}

// ---- input ----------------------------------------------------------------

/// {"answer": "a; b"} or {"answers": ["a", "b"]}.
inline GoldAnswers gold_from_json(const json& j, const std::string& where = "gold") {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  try {
    if (j.contains("answers"))
      return GoldAnswers::from_list(detail::get_as<std::vector<std::string>>(j["answers"], where + ".answers"));
    if (j.contains("answer"))
      return GoldAnswers::from_joined(detail::get_as<std::string>(j["answer"], where + ".answer"));
  } catch (const InputError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
  throw InputError(where + ": needs 'answer' or 'answers'");
}

/// {"text", "token_spans": [[start, end], ...], "mask"?: [bool|0|1, ...]}.
/// A missing mask marks every token as a completion token.
inline Completion completion_from_json(const json& j, const std::string& where = "completion") {
  Completion c;
  c.text = detail::get_as<std::string>(detail::require(j, "text", where), where + ".text");
  const json& spans = detail::require(j, "token_spans", where);
  if (!spans.is_array()) throw InputError(where + ".token_spans: expected an array");
  for (size_t i = 0; i < spans.size(); ++i) {
    const std::string w = where + ".token_spans[" + std::to_string(i) + "]";
    const json& s = spans[i];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_unsigned() || !s[1].is_number_unsigned())
      throw InputError(w + ": expected [start, end] with non-negative integers");
    c.token_spans.push_back({s[0].get<size_t>(), s[1].get<size_t>()});
  }
  if (auto it = j.find("mask"); it != j.end()) {
    if (!it->is_array()) throw InputError(where + ".mask: expected an array");
    for (size_t i = 0; i < it->size(); ++i) {
      const json& m = (*it)[i];
      if (m.is_boolean()) c.mask.push_back(m.get<bool>());
      else if (m.is_number_integer() && (m.get<int64_t>() == 0 || m.get<int64_t>() == 1))
        c.mask.push_back(m.get<int64_t>() == 1);
      else throw InputError(where + ".mask[" + std::to_string(i) + "]: expected a boolean or 0/1");
    }
  } else {
    c.mask.assign(c.token_spans.size(), true);
  }
  return c;
}

inline QuestionStats question_stats_from_json(const json& j, const std::string& where = "grade") {
  QuestionStats s;
  s.question_id = detail::get_as<std::string>(detail::require(j, "question_id", where), where + ".question_id");
  s.n_correct = detail::get_as<int>(detail::require(j, "n_correct", where), where + ".n_correct");
  s.group_size = detail::get_as<int>(detail::require(j, "G", where), where + ".G");
  if (s.group_size < 1) throw InputError(where + ".G: must be positive");
  if (s.n_correct < 0 || s.n_correct > s.group_size)
    throw InputError(where + ".n_correct: outside [0, G]");
  return s;
}

/// A missing or null "correct" yields an unlabeled record.
inline CalibrationRecord calibration_record_from_json(const json& j, const std::string& where = "record") {
  CalibrationRecord r;
  const json& c = detail::require(j, "count", where);
  if (!c.is_number_unsigned()) throw InputError(where + ".count: expected a non-negative integer");
  r.count = c.get<uint64_t>();
  if (auto it = j.find("correct"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw InputError(where + ".correct: expected a boolean");
    r.correct = it->get<bool>();
  }
  return r;
}

}  // namespace corver
