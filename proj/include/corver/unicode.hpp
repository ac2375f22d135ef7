#pragma once

// UTF-8 helpers and the handful of Unicode character classes the pipeline
// needs. Character offsets everywhere in corver are code-point indices.

#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace corver::unicode {

/// Decodes UTF-8 into code points. Invalid sequences become U+FFFD, one per
/// offending byte.
inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t c) {
  uint8_t buf[4];
  int32_t len = 0;
  UBool err = false;
  U8_APPEND(buf, len, 4, static_cast<UChar32>(c), err);
  if (err) {
    out += "\xEF\xBF\xBD";
    return;
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<size_t>(len));
}

inline std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) append_utf8(out, c);
  return out;
}

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

inline bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }

inline bool is_alphabetic(char32_t c) {
  return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_ALPHABETIC);
}

inline bool is_upper_initial(char32_t c) {
  const auto t = u_charType(static_cast<UChar32>(c));
  return t == U_UPPERCASE_LETTER || t == U_TITLECASE_LETTER;
}

inline bool is_nonspacing_mark(char32_t c) {
  return u_charType(static_cast<UChar32>(c)) == U_NON_SPACING_MARK;
}

inline bool is_punctuation(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }

/// Regex-style word character: letters, marks, numbers, connector punctuation.
inline bool is_word_char(char32_t c) {
  const auto mask = U_GET_GC_MASK(static_cast<UChar32>(c));
  return (mask & (U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK | U_GC_PC_MASK)) != 0;
}

inline icu::UnicodeString to_icu(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

inline std::string from_icu(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

inline std::string nfkd(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKDInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFKD instance unavailable");
  icu::UnicodeString out = norm->normalize(to_icu(s), status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFKD normalization failed");
  return from_icu(out);
}

/// Full (context-free) Unicode lowercase mapping.
inline std::string lower(std::string_view s) {
  icu::UnicodeString u = to_icu(s);
  u.toLower(icu::Locale::getRoot());
  return from_icu(u);
}

inline std::u32string_view trim(std::u32string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) { return encode(trim(decode(s))); }

inline size_t length(std::string_view s) { return decode(s).size(); }

}  // namespace corver::unicode
