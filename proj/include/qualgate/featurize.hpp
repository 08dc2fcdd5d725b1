#ifndef QUALGATE_FEATURIZE_HPP_
#define QUALGATE_FEATURIZE_HPP_

// Hashed n-gram featurization. Tokens are maximal runs of non-whitespace
// bytes (ASCII whitespace only, so multi-byte UTF-8 sequences never split).
// Each n-gram is the tokens joined by a single space and hashed with
// MurmurHash3 x86_32, seed 0, over its UTF-8 bytes:
//
//   index = h mod hash_dim
//   sign  = (h >> 31) == 0 ? +1 : -1      (signed hashing only)
//
// Collisions are summed; optional L2 normalization is applied last.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qualgate/errors.hpp"
#include "qualgate/murmur3.hpp"
#include "qualgate/stopwords.hpp"

namespace qualgate {

struct FeaturizerConfig {
  int ngram_lo = 1;
  int ngram_hi = 2;
  std::uint32_t hash_dim = 1u << 20;
  bool signed_hashing = true;
  bool l2_normalize = true;
  bool remove_stopwords = false;
  std::string stopword_list_id{kDefaultStopwordListId};

  void validate() const {
    if (ngram_lo < 1 || ngram_lo > ngram_hi || ngram_hi > 3)
      throw ConfigError("ngram range must satisfy 1 <= lo <= hi <= 3, got (" +
                        std::to_string(ngram_lo) + "," +
                        std::to_string(ngram_hi) + ")");
    if (hash_dim < (1u << 10) || !std::has_single_bit(hash_dim))
      throw ConfigError("hash_dim must be a power of two >= 1024, got " +
                        std::to_string(hash_dim));
    if (remove_stopwords) builtin_stopwords(stopword_list_id);
  }

  bool operator==(const FeaturizerConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const FeaturizerConfig& c) {
  j = nlohmann::json{{"ngram_lo", c.ngram_lo},
                     {"ngram_hi", c.ngram_hi},
                     {"hash_dim", c.hash_dim},
                     {"signed_hashing", c.signed_hashing},
                     {"l2_normalize", c.l2_normalize},
                     {"remove_stopwords", c.remove_stopwords},
                     {"stopword_list_id", c.stopword_list_id}};
}

inline void from_json(const nlohmann::json& j, FeaturizerConfig& c) {
  j.at("ngram_lo").get_to(c.ngram_lo);
  j.at("ngram_hi").get_to(c.ngram_hi);
  j.at("hash_dim").get_to(c.hash_dim);
  j.at("signed_hashing").get_to(c.signed_hashing);
  j.at("l2_normalize").get_to(c.l2_normalize);
  j.at("remove_stopwords").get_to(c.remove_stopwords);
  j.at("stopword_list_id").get_to(c.stopword_list_id);
}

struct FeatureEntry {
  std::uint32_t index;
  double weight;

  bool operator==(const FeatureEntry&) const = default;
};

/// Sparse vector with strictly increasing indices, all < dim.
struct SparseFeatureVector {
  std::uint32_t dim = 0;
  std::vector<FeatureEntry> entries;

  double l2_norm() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight * e.weight;
    return std::sqrt(s);
  }

  bool operator==(const SparseFeatureVector&) const = default;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' ||
         c == '\r';
}

/// Calls fn(token) for each maximal non-whitespace run, in order.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    if (i > start) fn(text.substr(start, i - start));
  }
}

/// Whitespace tokenization without case folding; views point into `text`.
inline std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> tokens;
  for_each_token(text, [&](std::string_view t) { tokens.push_back(t); });
  return tokens;
}

inline std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  for_each_token(text, [&](std::string_view) { ++n; });
  return n;
}

/// Calls fn(gram) for every contiguous window of n tokens, n-major
/// (all unigrams, then all bigrams, ...). `buffer` is scratch space.
template <typename Fn>
void for_each_ngram(std::span<const std::string_view> tokens, int lo, int hi,
                    std::string& buffer, Fn&& fn) {
  const auto count = tokens.size();
  for (int n = lo; n <= hi; ++n) {
    const auto width = static_cast<std::size_t>(n);
    if (count < width) break;
    for (std::size_t pos = 0; pos + width <= count; ++pos) {
      if (width == 1) {
        fn(tokens[pos]);
        continue;
      }
      buffer.assign(tokens[pos]);
      for (std::size_t k = 1; k < width; ++k) {
        buffer.push_back(' ');
        buffer.append(tokens[pos + k]);
      }
      fn(std::string_view(buffer));
    }
  }
}

inline std::vector<std::string> ngrams(std::span<const std::string_view> tokens,
                                       int lo, int hi) {
  if (lo < 1 || lo > hi)
    throw ConfigError("ngram range must satisfy 1 <= lo <= hi");
  std::vector<std::string> out;
  std::string buffer;
  for_each_ngram(tokens, lo, hi, buffer,
                 [&](std::string_view g) { out.emplace_back(g); });
  return out;
}

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                       int lo, int hi) {
  std::vector<std::string_view> views(tokens.begin(), tokens.end());
  return ngrams(std::span<const std::string_view>(views), lo, hi);
}

/// Reusable featurizer. Holds no mutable state, so one instance may be shared
/// across threads; each thread passes its own Scratch.
class HashingVectorizer {
 public:
  struct Scratch {
    std::vector<std::string_view> tokens;
    std::vector<std::uint64_t> keys;
    std::string gram;
    std::string lowered;
  };

  explicit HashingVectorizer(FeaturizerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.remove_stopwords) stopwords_ = &builtin_stopwords(cfg_.stopword_list_id);
  }

  const FeaturizerConfig& config() const noexcept { return cfg_; }

  SparseFeatureVector transform(std::string_view text) const {
    Scratch scratch;
    return transform(text, scratch);
  }

  SparseFeatureVector transform(std::string_view text, Scratch& s) const {
    SparseFeatureVector out;
    transform_into(text, s, out);
    return out;
  }

  void transform_into(std::string_view text, Scratch& s,
                      SparseFeatureVector& out) const {
    out.dim = cfg_.hash_dim;
    out.entries.clear();

    s.tokens.clear();
    for_each_token(text, [&](std::string_view t) {
      if (stopwords_ == nullptr || !is_stopword(t, s.lowered))
        s.tokens.push_back(t);
    });

    // key = index << 1 | negative; sorting groups equal indices together.
    s.keys.clear();
    const std::uint32_t mask = cfg_.hash_dim - 1;
    for_each_ngram(s.tokens, cfg_.ngram_lo, cfg_.ngram_hi, s.gram,
                   [&](std::string_view g) {
                     const std::uint32_t h = murmurhash3_x86_32(g, 0);
                     const std::uint64_t neg =
                         cfg_.signed_hashing ? (h >> 31) : 0u;
                     s.keys.push_back((static_cast<std::uint64_t>(h & mask) << 1) | neg);
                   });
    std::sort(s.keys.begin(), s.keys.end());

    for (std::size_t i = 0; i < s.keys.size();) {
      const auto index = static_cast<std::uint32_t>(s.keys[i] >> 1);
      double w = 0.0;
      for (; i < s.keys.size() && (s.keys[i] >> 1) == index; ++i)
        w += (s.keys[i] & 1u) ? -1.0 : 1.0;
      // Signed collisions may cancel; explicit zeros are dropped.
      if (w != 0.0) out.entries.push_back({index, w});
    }

    if (cfg_.l2_normalize && !out.entries.empty()) {
      const double norm = out.l2_norm();
      for (auto& e : out.entries) e.weight /= norm;
    }
  }

 private:
  bool is_stopword(std::string_view token, std::string& lowered) const {
    lowered.assign(token);
    for (auto& c : lowered)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return stopwords_->find(std::string_view(lowered)) != stopwords_->end();
  }

  FeaturizerConfig cfg_;
  const StopwordSet* stopwords_ = nullptr;
};

inline SparseFeatureVector hash_features(std::string_view text,
                                         const FeaturizerConfig& cfg) {
  return HashingVectorizer(cfg).transform(text);
}

}  // namespace qualgate

#endif  // QUALGATE_FEATURIZE_HPP_
