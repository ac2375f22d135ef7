#pragma once

// Brute-force reference implementations used as test oracles. Deliberately
// naive: no shared code with the library beyond plain data types.

#include <corver/corpus_index.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <vector>

namespace oracle {

using corver::TokenId;

inline std::vector<uint64_t> suffix_array(const std::vector<TokenId>& t) {
  std::vector<uint64_t> sa(t.size());
  for (uint64_t i = 0; i < sa.size(); ++i) sa[i] = i;
  std::sort(sa.begin(), sa.end(), [&](uint64_t a, uint64_t b) {
    return std::lexicographical_compare(t.begin() + static_cast<long>(a), t.end(),
                                        t.begin() + static_cast<long>(b), t.end());
  });
  return sa;
}

inline std::vector<uint64_t> occurrences(const std::vector<TokenId>& t, const std::vector<TokenId>& phrase) {
  std::vector<uint64_t> out;
  if (phrase.empty() || phrase.size() > t.size()) return out;
  for (uint64_t p = 0; p + phrase.size() <= t.size(); ++p) {
    bool ok = true;
    for (size_t k = 0; k < phrase.size(); ++k)
      if (t[p + k] != phrase[k]) ok = false;
    if (ok) out.push_back(p);
  }
  return out;
}

inline uint64_t doc_of(const std::vector<uint64_t>& bounds, uint64_t pos) {
  uint64_t d = 0;
  for (uint64_t i = 0; i < bounds.size(); ++i)
    if (bounds[i] <= pos) d = i;
  return d;
}

struct Count {
  uint64_t count = 0;
  bool truncated = false;
  size_t anchor = 0;
};

/// Anchor = clause with fewest occurrences (lowest index on ties). Counts the
/// first `cap` anchor occurrences p for which every other clause has an
/// occurrence q in the same document with |q - p| <= window.
inline Count cnf(const corver::Corpus& c, const std::vector<std::vector<TokenId>>& clauses,
                 uint64_t window, uint64_t cap = UINT64_MAX) {
  std::vector<std::vector<uint64_t>> occ;
  for (const auto& cl : clauses) occ.push_back(occurrences(c.tokens, cl));
  Count r;
  for (size_t i = 1; i < clauses.size(); ++i)
    if (occ[i].size() < occ[r.anchor].size()) r.anchor = i;
  const auto& anchors = occ[r.anchor];
  r.truncated = anchors.size() > cap;
  for (size_t a = 0; a < anchors.size() && a < cap; ++a) {
    const uint64_t p = anchors[a];
    bool all = true;
    for (size_t i = 0; i < clauses.size() && all; ++i) {
      if (i == r.anchor) continue;
      bool near = false;
      for (uint64_t q : occ[i]) {
        const uint64_t dist = p > q ? p - q : q - p;
        if (dist <= window && doc_of(c.doc_bounds, q) == doc_of(c.doc_bounds, p)) near = true;
      }
      all = near;
    }
    if (all) ++r.count;
  }
  return r;
}

/// Random corpus of up to `max_len` tokens over `vocab` ids with random
/// document splits.
inline corver::Corpus random_corpus(std::mt19937_64& rng, size_t max_len, uint32_t vocab) {
  corver::Corpus c;
  const size_t n = 1 + rng() % max_len;
  for (size_t i = 0; i < n; ++i) c.tokens.push_back(static_cast<TokenId>(rng() % vocab));
  const size_t docs = rng() % 4;
  for (size_t d = 0; d < docs; ++d) {
    const uint64_t b = 1 + rng() % n;
    if (b < n) c.doc_bounds.push_back(b);
  }
  std::sort(c.doc_bounds.begin(), c.doc_bounds.end());
  c.doc_bounds.erase(std::unique(c.doc_bounds.begin(), c.doc_bounds.end()), c.doc_bounds.end());
  c.vocab_meta.vocab_size = vocab;
  return c;
}

inline std::vector<TokenId> random_phrase(std::mt19937_64& rng, const corver::Corpus& c, uint32_t vocab) {
  const size_t len = 1 + rng() % 2;
  std::vector<TokenId> p;
  if (rng() % 2 == 0 && c.tokens.size() >= len) {
    const size_t at = rng() % (c.tokens.size() - len + 1);
    p.assign(c.tokens.begin() + static_cast<long>(at), c.tokens.begin() + static_cast<long>(at + len));
  } else {
    for (size_t k = 0; k < len; ++k) p.push_back(static_cast<TokenId>(rng() % vocab));
  }
  return p;
}

}  // namespace oracle
