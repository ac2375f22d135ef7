#pragma once

// Immutable suffix-array index over a token sequence, answering exact phrase
// counts and bounded-window conjunctive (CNF) co-occurrence counts.
//
// On-disk layout (little-endian), version 1:
//   "CVIX" | u32 version | u8 token_width | 3 reserved | u64 tokens_len
//   | u64 docs_len | u64 max_clause_freq | u64 max_clause_dist
//   | u32 vocab_meta_len | vocab_meta bytes | u32 header crc32
//   | tokens (tokens_len * width/8) | suffix array (tokens_len * u64)
//   | doc bounds (docs_len * u64) | u32 crc32 of the three arrays
// The in-memory image of a built index is the same byte layout, so built and
// mapped indexes share every query path.

#include <corver/mapped_file.hpp>
#include <corver/suffix_array.hpp>
#include <corver/tokenizer.hpp>

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace corver {

static_assert(std::endian::native == std::endian::little, "index images are little-endian");

struct IndexBuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexMagicError : IndexFileError {
  using IndexFileError::IndexFileError;
};
struct IndexVersionError : IndexFileError {
  using IndexFileError::IndexFileError;
};
struct IndexChecksumError : IndexFileError {
  using IndexFileError::IndexFileError;
};
struct IndexTruncatedError : IndexFileError {
  using IndexFileError::IndexFileError;
};

struct VocabMeta {
  std::string tokenizer_id = "ids";
  uint64_t vocab_size = 0;

  std::string encode() const {
    return "tokenizer=" + tokenizer_id + ";vocab_size=" + std::to_string(vocab_size);
  }

  static VocabMeta decode(std::string_view s) {
    VocabMeta m;
    m.tokenizer_id.clear();
    size_t pos = 0;
    while (pos <= s.size()) {
      size_t end = s.find(';', pos);
      if (end == std::string_view::npos) end = s.size();
      const std::string_view kv = s.substr(pos, end - pos);
      const size_t eq = kv.find('=');
      if (eq != std::string_view::npos) {
        const std::string_view key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "tokenizer") m.tokenizer_id = std::string(val);
        if (key == "vocab_size") m.vocab_size = std::stoull(std::string(val));
      }
      pos = end + 1;
    }
    return m;
  }

  bool operator==(const VocabMeta&) const = default;
};

struct Corpus {
  std::vector<TokenId> tokens;
  std::vector<uint64_t> doc_bounds{0};
  VocabMeta vocab_meta;
};

struct IndexParams {
  uint64_t max_clause_freq = 500000;
  uint64_t max_clause_dist = 1000;
  unsigned token_width = 32;

  static unsigned width_for_vocab(uint64_t vocab_size) { return vocab_size <= 65536 ? 16 : 32; }
};

using Clause = std::vector<TokenId>;

struct CnfQuery {
  std::vector<Clause> clauses;
  uint64_t window = 1000;
};

struct CnfCount {
  uint64_t count = 0;
  bool truncated = false;
  size_t anchor_clause = 0;

  bool operator==(const CnfCount&) const = default;
};

/// How companion clauses are checked around each anchor occurrence. Both
/// strategies are exact; Auto picks the cheaper one per clause.
enum class CnfStrategy { Auto, SortedPositions, WindowScan };

struct SaRange {
  uint64_t begin = 0;
  uint64_t end = 0;
  uint64_t size() const { return end - begin; }
};

namespace detail {

template <class T>
T load_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <class T>
void store_le(std::byte* p, T v) {
  std::memcpy(p, &v, sizeof v);
}

inline uint32_t crc32(std::span<const std::byte> bytes, uint32_t crc = 0) {
  uLong c = crc;
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  size_t left = bytes.size();
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<size_t>(left, 1u << 30));
    c = ::crc32(c, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<uint32_t>(c);
}

inline constexpr std::array<char, 4> kMagic{'C', 'V', 'I', 'X'};
inline constexpr uint32_t kVersion = 1;
inline constexpr size_t kFixedHeader = 48;  // bytes before vocab_meta

}  // namespace detail

class CorpusIndex {
 public:
  static constexpr uint32_t kFormatVersion = detail::kVersion;

  uint64_t size() const { return tokens_len_; }
  uint64_t doc_count() const { return docs_len_; }
  unsigned token_width() const { return width_; }
  const IndexParams& params() const { return params_; }
  const VocabMeta& vocab_meta() const { return meta_; }
  std::span<const std::byte> image() const { return image_; }

  TokenId token(uint64_t pos) const {
    return width_ == 16 ? detail::load_le<uint16_t>(tokens_ + 2 * pos)
                        : detail::load_le<uint32_t>(tokens_ + 4 * pos);
  }
  uint64_t suffix(uint64_t rank) const { return detail::load_le<uint64_t>(sa_ + 8 * rank); }
  uint64_t doc_bound(uint64_t d) const { return detail::load_le<uint64_t>(docs_ + 8 * d); }

  uint64_t doc_of(uint64_t pos) const {
    uint64_t lo = 0, hi = docs_len_;
    while (hi - lo > 1) {
      const uint64_t mid = lo + (hi - lo) / 2;
      if (doc_bound(mid) <= pos) lo = mid; else hi = mid;
    }
    return lo;
  }
  uint64_t doc_end(uint64_t d) const { return d + 1 < docs_len_ ? doc_bound(d + 1) : tokens_len_; }

  /// Suffix-array interval whose suffixes start with `phrase`.
  SaRange find(std::span<const TokenId> phrase) const {
    if (phrase.empty()) return {0, tokens_len_};
    uint64_t lo = 0, hi = tokens_len_;
    while (lo < hi) {
      const uint64_t mid = lo + (hi - lo) / 2;
      if (compare_suffix(suffix(mid), phrase) < 0) lo = mid + 1; else hi = mid;
    }
    const uint64_t first = lo;
    hi = tokens_len_;
    while (lo < hi) {
      const uint64_t mid = lo + (hi - lo) / 2;
      if (compare_suffix(suffix(mid), phrase) <= 0) lo = mid + 1; else hi = mid;
    }
    return {first, lo};
  }

  uint64_t clause_count(std::span<const TokenId> clause) const {
    if (clause.empty()) throw std::invalid_argument("clause_count: empty clause");
    return find(clause).size();
  }

  bool matches_at(uint64_t pos, std::span<const TokenId> phrase) const {
    if (pos + phrase.size() > tokens_len_) return false;
    for (size_t k = 0; k < phrase.size(); ++k)
      if (token(pos + k) != phrase[k]) return false;
    return true;
  }

  /// Anchored co-occurrence count. The anchor is the clause with the fewest
  /// occurrences (lowest index on ties); an anchor occurrence p counts when
  /// every other clause occurs at some q in p's document with |q - p| <= window.
  /// At most max_clause_freq anchor occurrences are scanned, in corpus order.
  CnfCount cnf_count(const CnfQuery& query, CnfStrategy strategy = CnfStrategy::Auto) const {
    return run_cnf(query, std::numeric_limits<uint64_t>::max(), strategy);
  }

  /// Like cnf_count but stops as soon as `threshold` matches are found; the
  /// returned count is min(true count, threshold) over the scanned anchors.
  CnfCount count_at_least(const CnfQuery& query, uint64_t threshold,
                          CnfStrategy strategy = CnfStrategy::Auto) const {
    return run_cnf(query, threshold, strategy);
  }

  void save(const std::string& path) const {
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
      out.write(reinterpret_cast<const char*>(image_.data()),
                static_cast<std::streamsize>(image_.size()));
      if (!out) throw std::runtime_error("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  static CorpusIndex load(const std::string& path) {
    auto file = std::make_shared<const MappedFile>(path);
    CorpusIndex idx;
    idx.attach(file->bytes());
    idx.owner_ = std::move(file);
    return idx;
  }

  static CorpusIndex from_image(std::vector<std::byte> image) {
    auto buf = std::make_shared<const std::vector<std::byte>>(std::move(image));
    CorpusIndex idx;
    idx.attach(std::span<const std::byte>(*buf));
    idx.owner_ = std::move(buf);
    return idx;
  }

 private:
  int compare_suffix(uint64_t pos, std::span<const TokenId> phrase) const {
    for (size_t k = 0; k < phrase.size(); ++k) {
      if (pos + k >= tokens_len_) return -1;
      const TokenId t = token(pos + k);
      if (t != phrase[k]) return t < phrase[k] ? -1 : 1;
    }
    return 0;
  }

  std::vector<uint64_t> sorted_positions(SaRange r, uint64_t limit) const {
    std::vector<uint64_t> pos;
    pos.reserve(r.size());
    for (uint64_t j = r.begin; j < r.end; ++j) pos.push_back(suffix(j));
    if (limit < pos.size()) {
      std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(limit), pos.end());
      pos.resize(limit);
    }
    std::sort(pos.begin(), pos.end());
    return pos;
  }

  struct Companion {
    const Clause* clause = nullptr;
    bool scan = false;
    std::vector<uint64_t> positions;
    size_t cursor = 0;
  };

  bool companion_near(Companion& c, uint64_t lo, uint64_t hi) const {
    if (c.scan) {
      for (uint64_t q = lo; q <= hi; ++q)
        if (matches_at(q, *c.clause)) return true;
      return false;
    }
    while (c.cursor < c.positions.size() && c.positions[c.cursor] < lo) ++c.cursor;
    return c.cursor < c.positions.size() && c.positions[c.cursor] <= hi;
  }

  CnfCount run_cnf(const CnfQuery& query, uint64_t threshold, CnfStrategy strategy) const {
    if (query.clauses.size() < 2)
      throw std::invalid_argument("cnf_count: co-occurrence queries need at least 2 clauses");
    if (query.window < 1 || query.window > params_.max_clause_dist)
      throw std::invalid_argument("cnf_count: window " + std::to_string(query.window) +
                                  " outside [1, " + std::to_string(params_.max_clause_dist) + "]");
    for (const auto& c : query.clauses)
      if (c.empty()) throw std::invalid_argument("cnf_count: empty clause");

    const size_t k = query.clauses.size();
    std::vector<SaRange> ranges(k);
    for (size_t i = 0; i < k; ++i) ranges[i] = find(query.clauses[i]);

    size_t anchor = 0;
    for (size_t i = 1; i < k; ++i)
      if (ranges[i].size() < ranges[anchor].size()) anchor = i;

    CnfCount result;
    result.anchor_clause = anchor;
    if (ranges[anchor].size() == 0 || threshold == 0) return result;

    const uint64_t cap = params_.max_clause_freq;
    result.truncated = ranges[anchor].size() > cap;
    const std::vector<uint64_t> anchors = sorted_positions(ranges[anchor], cap);
    const uint64_t w = query.window;

    std::vector<size_t> order;
    for (size_t i = 0; i < k; ++i)
      if (i != anchor) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return ranges[a].size() < ranges[b].size(); });

    std::vector<Companion> companions;
    companions.reserve(order.size());
    for (size_t i : order) {
      Companion c;
      c.clause = &query.clauses[i];
      const double m = static_cast<double>(ranges[i].size());
      const double sort_cost = 2.0 * m * (std::log2(m + 1.0) + 1.0);
      const double scan_cost = static_cast<double>(anchors.size()) *
                               static_cast<double>(2 * w + 1) *
                               static_cast<double>(c.clause->size());
      c.scan = strategy == CnfStrategy::WindowScan ||
               (strategy == CnfStrategy::Auto && scan_cost < sort_cost);
      if (!c.scan) c.positions = sorted_positions(ranges[i], ranges[i].size());
      companions.push_back(std::move(c));
    }

    uint64_t doc = doc_of(anchors.front());
    for (uint64_t p : anchors) {
      while (doc + 1 < docs_len_ && doc_bound(doc + 1) <= p) ++doc;
      const uint64_t lo = std::max(p >= w ? p - w : 0, doc_bound(doc));
      const uint64_t hi = std::min(p + w, doc_end(doc) - 1);
      bool ok = true;
      for (auto& c : companions)
        if (!companion_near(c, lo, hi)) {
          ok = false;
          break;
        }
      if (ok && ++result.count >= threshold) break;
    }
    return result;
  }

  void attach(std::span<const std::byte> bytes) {
    using detail::load_le;
    if (bytes.size() < 4) throw IndexTruncatedError("index file truncated before magic");
    if (std::memcmp(bytes.data(), detail::kMagic.data(), 4) != 0)
      throw IndexMagicError("bad magic: not a corver index file");
    if (bytes.size() < 8) throw IndexTruncatedError("index file truncated before version");
    const uint32_t version = load_le<uint32_t>(bytes.data() + 4);
    if (version != detail::kVersion)
      throw IndexVersionError("unsupported index format version " + std::to_string(version));
    if (bytes.size() < detail::kFixedHeader)
      throw IndexTruncatedError("index file truncated inside header");
    const uint32_t meta_len = load_le<uint32_t>(bytes.data() + 44);
    const size_t header_len = detail::kFixedHeader + meta_len;
    if (bytes.size() < header_len + 4) throw IndexTruncatedError("index file truncated inside header");
    const uint32_t header_crc = load_le<uint32_t>(bytes.data() + header_len);
    if (detail::crc32(bytes.first(header_len)) != header_crc)
      throw IndexChecksumError("index header checksum mismatch");

    width_ = static_cast<unsigned>(bytes[8]);
    if (width_ != 16 && width_ != 32) throw IndexFileError("invalid token width in header");
    tokens_len_ = load_le<uint64_t>(bytes.data() + 12);
    docs_len_ = load_le<uint64_t>(bytes.data() + 20);
    params_.max_clause_freq = load_le<uint64_t>(bytes.data() + 28);
    params_.max_clause_dist = load_le<uint64_t>(bytes.data() + 36);
    params_.token_width = width_;
    meta_ = VocabMeta::decode(std::string_view(
        reinterpret_cast<const char*>(bytes.data() + detail::kFixedHeader), meta_len));

    const size_t arrays_at = header_len + 4;
    const size_t arrays_len = tokens_len_ * (width_ / 8) + tokens_len_ * 8 + docs_len_ * 8;
    if (bytes.size() < arrays_at + arrays_len + 4)
      throw IndexTruncatedError("index file truncated: expected " +
                                std::to_string(arrays_at + arrays_len + 4) + " bytes, found " +
                                std::to_string(bytes.size()));
    if (bytes.size() > arrays_at + arrays_len + 4)
      throw IndexFileError("trailing bytes after index payload");
    const auto arrays = bytes.subspan(arrays_at, arrays_len);
    if (detail::crc32(arrays) != load_le<uint32_t>(bytes.data() + arrays_at + arrays_len))
      throw IndexChecksumError("index payload checksum mismatch");

    image_ = bytes;
    tokens_ = bytes.data() + arrays_at;
    sa_ = tokens_ + tokens_len_ * (width_ / 8);
    docs_ = sa_ + tokens_len_ * 8;
  }

  std::shared_ptr<const void> owner_;
  std::span<const std::byte> image_;
  const std::byte* tokens_ = nullptr;
  const std::byte* sa_ = nullptr;
  const std::byte* docs_ = nullptr;
  uint64_t tokens_len_ = 0;
  uint64_t docs_len_ = 0;
  unsigned width_ = 32;
  IndexParams params_;
  VocabMeta meta_;
};

inline void validate_corpus(const Corpus& corpus, const IndexParams& params) {
  if (params.max_clause_freq < 1) throw IndexBuildError("max_clause_freq must be >= 1");
  if (params.max_clause_dist < 1) throw IndexBuildError("max_clause_dist must be >= 1");
  if (params.token_width != 16 && params.token_width != 32)
    throw IndexBuildError("token_width must be 16 or 32");
  if (corpus.tokens.empty()) throw IndexBuildError("corpus has no tokens");
  if (corpus.doc_bounds.empty() || corpus.doc_bounds.front() != 0)
    throw IndexBuildError("doc_bounds must start at 0");
  for (size_t i = 1; i < corpus.doc_bounds.size(); ++i)
    if (corpus.doc_bounds[i] <= corpus.doc_bounds[i - 1])
      throw IndexBuildError("doc_bounds not strictly increasing at entry " + std::to_string(i));
  if (corpus.doc_bounds.back() >= corpus.tokens.size())
    throw IndexBuildError("doc bound " + std::to_string(corpus.doc_bounds.back()) +
                          " is past the last token");
  const uint64_t width_max = params.token_width == 16 ? 0xFFFFu : 0xFFFFFFFFu;
  for (size_t i = 0; i < corpus.tokens.size(); ++i) {
    const TokenId t = corpus.tokens[i];
    if (t > width_max)
      throw IndexBuildError("token id " + std::to_string(t) + " at position " + std::to_string(i) +
                            " does not fit " + std::to_string(params.token_width) + "-bit width");
    if (corpus.vocab_meta.vocab_size > 0 && t >= corpus.vocab_meta.vocab_size)
      throw IndexBuildError("token id " + std::to_string(t) + " at position " + std::to_string(i) +
                            " exceeds vocabulary size " +
                            std::to_string(corpus.vocab_meta.vocab_size));
  }
}

inline CorpusIndex build_index(const Corpus& corpus, const IndexParams& params = {}) {
  using detail::store_le;
  validate_corpus(corpus, params);
  const uint64_t n = corpus.tokens.size();
  const uint64_t d = corpus.doc_bounds.size();
  const std::string meta = corpus.vocab_meta.encode();
  const size_t header_len = detail::kFixedHeader + meta.size();
  const size_t tok_bytes = n * (params.token_width / 8);
  const size_t arrays_len = tok_bytes + n * 8 + d * 8;

  std::vector<std::byte> img(header_len + 4 + arrays_len + 4);
  std::byte* p = img.data();
  std::memcpy(p, detail::kMagic.data(), 4);
  store_le<uint32_t>(p + 4, detail::kVersion);
  p[8] = static_cast<std::byte>(params.token_width);
  store_le<uint64_t>(p + 12, n);
  store_le<uint64_t>(p + 20, d);
  store_le<uint64_t>(p + 28, params.max_clause_freq);
  store_le<uint64_t>(p + 36, params.max_clause_dist);
  store_le<uint32_t>(p + 44, static_cast<uint32_t>(meta.size()));
  std::memcpy(p + detail::kFixedHeader, meta.data(), meta.size());
  store_le<uint32_t>(p + header_len, detail::crc32(std::span<const std::byte>(img).first(header_len)));

  std::byte* tok = p + header_len + 4;
  for (uint64_t i = 0; i < n; ++i) {
    if (params.token_width == 16)
      store_le<uint16_t>(tok + 2 * i, static_cast<uint16_t>(corpus.tokens[i]));
    else
      store_le<uint32_t>(tok + 4 * i, corpus.tokens[i]);
  }
  std::byte* sa = tok + tok_bytes;
  const std::span<const TokenId> text(corpus.tokens);
  if (n < (uint64_t{1} << 32)) {
    const auto order = build_suffix_array<uint32_t>(text);
    for (uint64_t j = 0; j < n; ++j) store_le<uint64_t>(sa + 8 * j, order[j]);
  } else {
    const auto order = build_suffix_array<uint64_t>(text);
    for (uint64_t j = 0; j < n; ++j) store_le<uint64_t>(sa + 8 * j, order[j]);
  }
  std::byte* docs = sa + n * 8;
  for (uint64_t i = 0; i < d; ++i) store_le<uint64_t>(docs + 8 * i, corpus.doc_bounds[i]);
  const auto arrays = std::span<const std::byte>(img).subspan(header_len + 4, arrays_len);
  store_le<uint32_t>(p + header_len + 4 + arrays_len, detail::crc32(arrays));

  return CorpusIndex::from_image(std::move(img));
}

}  // namespace corver
