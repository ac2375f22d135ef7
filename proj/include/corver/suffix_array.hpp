#pragma once

// Suffix-array construction by prefix doubling with counting-sort passes,
// O(n log n). A suffix that ends is smaller than any extension of it.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace corver {

template <class Idx, class Token>
std::vector<Idx> build_suffix_array(std::span<const Token> text) {
  const size_t n = text.size();
  std::vector<Idx> sa(n);
  if (n == 0) return sa;

  // dense ranks of the alphabet actually present
  std::vector<Token> alphabet(text.begin(), text.end());
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());

  std::vector<Idx> rank(n);
  for (size_t i = 0; i < n; ++i)
    rank[i] = static_cast<Idx>(std::lower_bound(alphabet.begin(), alphabet.end(), text[i]) -
                               alphabet.begin());
  size_t classes = alphabet.size();

  std::vector<Idx> count(std::max(classes, n) + 1);
  auto counting_sort = [&](const std::vector<Idx>& in, std::vector<Idx>& out, size_t range) {
    std::fill(count.begin(), count.begin() + static_cast<std::ptrdiff_t>(range) + 1, Idx{0});
    for (Idx i : in) ++count[rank[i] + 1];
    for (size_t c = 1; c <= range; ++c) count[c] += count[c - 1];
    for (Idx i : in) out[count[rank[i]]++] = i;
  };

  {
    std::vector<Idx> ident(n);
    std::iota(ident.begin(), ident.end(), Idx{0});
    counting_sort(ident, sa, classes);
  }

  std::vector<Idx> tmp(n), next(n);
  for (size_t k = 1; classes < n; k <<= 1) {
    // order by second key: short suffixes first, then shifted previous order
    size_t t = 0;
    for (size_t i = n - std::min(k, n); i < n; ++i) tmp[t++] = static_cast<Idx>(i);
    for (size_t j = 0; j < n; ++j)
      if (sa[j] >= k) tmp[t++] = static_cast<Idx>(sa[j] - k);
    counting_sort(tmp, sa, classes);

    auto second = [&](Idx i) -> size_t { return i + k < n ? size_t(rank[i + k]) + 1 : 0; };
    next[sa[0]] = 0;
    size_t c = 0;
    for (size_t j = 1; j < n; ++j) {
      const Idx a = sa[j - 1], b = sa[j];
      if (rank[a] != rank[b] || second(a) != second(b)) ++c;
      next[b] = static_cast<Idx>(c);
    }
    rank.swap(next);
    classes = c + 1;
    if (k > n) break;
  }
  return sa;
}

}  // namespace corver
