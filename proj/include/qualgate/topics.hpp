#ifndef QUALGATE_TOPICS_HPP_
#define QUALGATE_TOPICS_HPP_

// Latent Dirichlet allocation fit by collapsed Gibbs sampling, plus the
// vocabulary builder and fold-in inference used to turn documents into
// topic-share regressors.
//
// Topic preprocessing is separate from the classifier's featurizer: tokens
// here are maximal runs of ASCII letters, lowercased, with stopwords removed.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "qualgate/errors.hpp"
#include "qualgate/murmur3.hpp"
#include "qualgate/random.hpp"
#include "qualgate/stopwords.hpp"

namespace qualgate {

struct VocabConfig {
  bool lowercase = true;
  std::size_t min_token_length = 2;
  std::size_t min_df = 5;
  /// Terms in more than this fraction of documents are dropped.
  double max_df = 0.95;
  std::size_t max_terms = 50000;
  /// "none" disables stopword removal.
  std::string stopword_list_id{kDefaultStopwordListId};
};

inline void to_json(nlohmann::json& j, const VocabConfig& c) {
  j = nlohmann::json{{"lowercase", c.lowercase},      {"min_token_length", c.min_token_length},
                     {"min_df", c.min_df},            {"max_df", c.max_df},
                     {"max_terms", c.max_terms},      {"stopword_list_id", c.stopword_list_id}};
}

inline void from_json(const nlohmann::json& j, VocabConfig& c) {
  j.at("lowercase").get_to(c.lowercase);
  j.at("min_token_length").get_to(c.min_token_length);
  j.at("min_df").get_to(c.min_df);
  j.at("max_df").get_to(c.max_df);
  j.at("max_terms").get_to(c.max_terms);
  j.at("stopword_list_id").get_to(c.stopword_list_id);
}

/// Alphabetic tokens of `text` under `cfg`, in order.
inline std::vector<std::string> topic_tokens(std::string_view text, const VocabConfig& cfg) {
  const auto& stop = builtin_stopwords(cfg.stopword_list_id);
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= cfg.min_token_length && !stop.contains(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const bool upper = ch >= 'A' && ch <= 'Z';
    const bool lower = ch >= 'a' && ch <= 'z';
    if (upper || lower) {
      cur.push_back(upper && cfg.lowercase ? static_cast<char>(ch - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      flush();
    }
  }
  if (!cur.empty()) flush();
  return out;
}

struct Vocabulary {
  std::vector<std::string> terms;  // index -> term, lexicographic
  std::vector<std::size_t> doc_freq;
  VocabConfig config;

  std::size_t size() const { return terms.size(); }

  std::optional<std::uint32_t> index_of(std::string_view term) const {
    auto it = std::lower_bound(terms.begin(), terms.end(), term);
    if (it == terms.end() || *it != term) return std::nullopt;
    return static_cast<std::uint32_t>(it - terms.begin());
  }

  std::vector<std::uint32_t> encode(std::string_view text) const {
    std::vector<std::uint32_t> ids;
    for (const auto& t : topic_tokens(text, config))
      if (auto id = index_of(t)) ids.push_back(*id);
    return ids;
  }
};

/// Keeps terms with min_df <= df and df / N <= max_df, then the max_terms
/// most frequent (ties lexicographic). Indices are assigned in lexicographic
/// order of the kept terms.
inline Vocabulary build_vocab(const std::vector<std::string_view>& texts, const VocabConfig& cfg) {
  if (texts.empty()) throw DataError("build_vocab: empty corpus");
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;  // df, tf
  for (auto text : texts) {
    auto tokens = topic_tokens(text, cfg);
    std::sort(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto& c = counts[tokens[i]];
      ++c.second;
      if (i == 0 || tokens[i] != tokens[i - 1]) ++c.first;
    }
  }
  const double n_docs = static_cast<double>(texts.size());
  std::vector<std::tuple<std::size_t, std::string, std::size_t>> kept;  // tf, term, df
  for (auto& [term, c] : counts) {
    if (c.first < cfg.min_df) continue;
    if (static_cast<double>(c.first) / n_docs > cfg.max_df) continue;
    kept.emplace_back(c.second, term, c.first);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  if (kept.size() > cfg.max_terms) kept.resize(cfg.max_terms);
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return std::get<1>(a) < std::get<1>(b); });
  if (kept.empty()) throw DataError("build_vocab: vocabulary is empty after filtering");

  Vocabulary v;
  v.config = cfg;
  for (auto& [tf, term, df] : kept) {
    v.terms.push_back(std::move(term));
    v.doc_freq.push_back(df);
  }
  return v;
}

struct LdaConfig {
  std::size_t num_topics = 10;
  /// Defaults to 50 / K when unset.
  std::optional<double> alpha;
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 0;

  double resolved_alpha() const {
    return alpha.value_or(50.0 / static_cast<double>(num_topics));
  }
};

struct TopicModel {
  std::size_t num_topics = 0;
  std::vector<double> topic_word;  // K x V, row-major, rows sum to 1
  double alpha = 0.0;
  double beta = 0.0;
  Vocabulary vocab;
  std::uint64_t seed = 0;
  int iterations = 0;

  std::size_t vocab_size() const { return vocab.size(); }
  double prob(std::size_t k, std::size_t w) const { return topic_word[k * vocab_size() + w]; }
};

struct DocTopics {
  std::string doc_id;
  std::vector<double> proportions;
  /// Set when the document had no in-vocabulary tokens (uniform output).
  bool empty = false;
};

/// Sampler counts, exposed to observers after each sweep.
struct GibbsState {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  std::vector<std::size_t> doc_lengths;
  std::vector<std::uint32_t> doc_topic;    // D x K
  std::vector<std::uint32_t> topic_word;   // K x V
  std::vector<std::uint32_t> topic_total;  // K
};

using GibbsObserver = std::function<void(int sweep, const GibbsState&)>;

struct LdaFit {
  TopicModel model;
  std::vector<std::vector<double>> doc_proportions;  // training documents
};

namespace detail {

inline std::size_t sample_discrete(std::span<const double> cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               cumulative.size() - 1);
}

}  // namespace detail

/// Collapsed Gibbs sampling: each token's topic is resampled from
/// P(z = k) ~ (n_dk + alpha) (n_kw + beta) / (n_k + V beta). The returned
/// distributions come from the final-state counts.
inline LdaFit fit_lda(const std::vector<std::string_view>& texts, const Vocabulary& vocab,
                      const LdaConfig& cfg, const GibbsObserver& observer = {}) {
  const std::size_t K = cfg.num_topics;
  if (K < 2) throw ConfigError("fit_lda: need at least 2 topics");
  if (cfg.iterations < 0) throw ConfigError("fit_lda: iterations must be >= 0");
  const double alpha = cfg.resolved_alpha();
  const double beta = cfg.beta;
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("fit_lda: alpha and beta must be > 0");
  const std::size_t V = vocab.size();
  const std::size_t D = texts.size();

  std::vector<std::vector<std::uint32_t>> words(D);
  std::size_t total_tokens = 0;
  for (std::size_t d = 0; d < D; ++d) {
    words[d] = vocab.encode(texts[d]);
    total_tokens += words[d].size();
  }
  if (total_tokens == 0) throw DataError("fit_lda: every document is empty under the vocabulary");

  GibbsState s;
  s.num_topics = K;
  s.vocab_size = V;
  s.doc_lengths.resize(D);
  s.doc_topic.assign(D * K, 0);
  s.topic_word.assign(K * V, 0);
  s.topic_total.assign(K, 0);
  std::vector<std::vector<std::uint32_t>> z(D);

  Rng rng = make_rng({cfg.seed, 0x1da});
  for (std::size_t d = 0; d < D; ++d) {
    s.doc_lengths[d] = words[d].size();
    z[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      const auto k = static_cast<std::uint32_t>(uniform_below(rng, K));
      z[d][i] = k;
      ++s.doc_topic[d * K + k];
      ++s.topic_word[k * V + words[d][i]];
      ++s.topic_total[k];
    }
  }

  const double vbeta = static_cast<double>(V) * beta;
  std::vector<double> cumulative(K);
  for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
    for (std::size_t d = 0; d < D; ++d) {
      auto* nd = &s.doc_topic[d * K];
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const auto w = words[d][i];
        const auto old = z[d][i];
        --nd[old];
        --s.topic_word[old * V + w];
        --s.topic_total[old];
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          acc += (nd[k] + alpha) * (s.topic_word[k * V + w] + beta) / (s.topic_total[k] + vbeta);
          cumulative[k] = acc;
        }
        const auto k = static_cast<std::uint32_t>(detail::sample_discrete(cumulative, rng));
        z[d][i] = k;
        ++nd[k];
        ++s.topic_word[k * V + w];
        ++s.topic_total[k];
      }
    }
    if (observer) observer(sweep, s);
  }

  LdaFit fit;
  auto& m = fit.model;
  m.num_topics = K;
  m.alpha = alpha;
  m.beta = beta;
  m.vocab = vocab;
  m.seed = cfg.seed;
  m.iterations = cfg.iterations;
  m.topic_word.resize(K * V);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t w = 0; w < V; ++w)
      m.topic_word[k * V + w] = (s.topic_word[k * V + w] + beta) / (s.topic_total[k] + vbeta);

  const double kalpha = static_cast<double>(K) * alpha;
  fit.doc_proportions.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    auto& p = fit.doc_proportions[d];
    p.resize(K);
    for (std::size_t k = 0; k < K; ++k)
      p[k] = (s.doc_topic[d * K + k] + alpha) / (static_cast<double>(s.doc_lengths[d]) + kalpha);
  }
  return fit;
}

inline constexpr int kFoldInSweeps = 50;

/// Fold-in Gibbs with the topic-word distributions frozen.
inline DocTopics infer_doc_topics(const TopicModel& model, std::string_view doc_id,
                                  std::string_view text, std::uint64_t seed,
                                  int sweeps = kFoldInSweeps) {
  const std::size_t K = model.num_topics;
  const std::size_t V = model.vocab_size();
  DocTopics out;
  out.doc_id = std::string(doc_id);
  const auto words = model.vocab.encode(text);
  if (words.empty()) {
    out.proportions.assign(K, 1.0 / static_cast<double>(K));
    out.empty = true;
    return out;
  }

  Rng rng = make_rng({seed, 0xf01d});
  std::vector<std::uint32_t> z(words.size());
  std::vector<std::uint32_t> nd(K, 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = static_cast<std::uint32_t>(uniform_below(rng, K));
    ++nd[z[i]];
  }
  std::vector<double> cumulative(K);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --nd[z[i]];
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        acc += (nd[k] + model.alpha) * model.topic_word[k * V + words[i]];
        cumulative[k] = acc;
      }
      z[i] = static_cast<std::uint32_t>(detail::sample_discrete(cumulative, rng));
      ++nd[z[i]];
    }
  }
  const double denom = static_cast<double>(words.size()) + static_cast<double>(K) * model.alpha;
  out.proportions.resize(K);
  for (std::size_t k = 0; k < K; ++k) out.proportions[k] = (nd[k] + model.alpha) / denom;
  return out;
}

/// Per-document seed derived from the model seed and the document id, so
/// results do not depend on processing order.
inline DocTopics infer_doc_topics(const TopicModel& model, std::string_view doc_id,
                                  std::string_view text) {
  const std::uint64_t seed = (model.seed << 32) ^ murmurhash3_x86_32(doc_id, 0x7091c);
  return infer_doc_topics(model, doc_id, text, seed);
}

/// Top-k terms per topic by probability, ties lexicographic.
inline std::vector<std::vector<std::string>> top_words(const TopicModel& model, std::size_t k) {
  const std::size_t V = model.vocab_size();
  if (k > V) throw ConfigError("top_words: k exceeds vocabulary size");
  std::vector<std::vector<std::string>> out(model.num_topics);
  std::vector<std::uint32_t> order(V);
  for (std::size_t t = 0; t < model.num_topics; ++t) {
    for (std::uint32_t w = 0; w < V; ++w) order[w] = w;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        const double pa = model.prob(t, a), pb = model.prob(t, b);
                        if (pa != pb) return pa > pb;
                        return model.vocab.terms[a] < model.vocab.terms[b];
                      });
    for (std::size_t i = 0; i < k; ++i) out[t].push_back(model.vocab.terms[order[i]]);
  }
  return out;
}

inline std::string render_top_words_markdown(const TopicModel& model, std::size_t k) {
  const auto words = top_words(model, k);
  std::ostringstream out;
  out << "| Topic | Top words |\n|---|---|\n";
  for (std::size_t t = 0; t < words.size(); ++t) {
    out << "| " << t << " | ";
    for (std::size_t i = 0; i < words[t].size(); ++i) out << (i ? ", " : "") << words[t][i];
    out << " |\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Serialization
//
//   "QGTOPICS"               8 bytes
//   u32 LE version (1)
//   u64 LE header length, then JSON {K, V, alpha, beta, seed, iterations,
//          vocab: {terms, doc_freq, config}}
//   K*V f64 LE topic_word, row-major

inline constexpr std::string_view kTopicMagic = "QGTOPICS";
inline constexpr std::uint32_t kTopicFormatVersion = 1;

inline void save_topic_model(const TopicModel& m, const std::string& path) {
  nlohmann::json header{{"K", m.num_topics},
                        {"V", m.vocab_size()},
                        {"alpha", m.alpha},
                        {"beta", m.beta},
                        {"seed", m.seed},
                        {"iterations", m.iterations},
                        {"vocab",
                         {{"terms", m.vocab.terms},
                          {"doc_freq", m.vocab.doc_freq},
                          {"config", m.vocab.config}}}};
  const std::string json = header.dump();
  std::string bytes(kTopicMagic);
  auto put = [&](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put(kTopicFormatVersion, 4);
  put(json.size(), 8);
  bytes += json;
  for (double p : m.topic_word) put(std::bit_cast<std::uint64_t>(p), 8);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write topic model " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline TopicModel load_topic_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read topic model " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto get = [&](int n) {
    if (pos + static_cast<std::size_t>(n) > bytes.size())
      throw ModelFormatError("topic model truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(n);
    return v;
  };
  if (bytes.size() < 8 || std::string_view(bytes).substr(0, 8) != kTopicMagic)
    throw ModelFormatError("not a topic model file");
  pos = 8;
  const auto version = get(4);
  if (version != kTopicFormatVersion)
    throw ModelFormatError("unsupported topic model version " + std::to_string(version));
  const auto len = get(8);
  if (pos + len > bytes.size()) throw ModelFormatError("topic model truncated");
  TopicModel m;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(pos, len));
    header.at("K").get_to(m.num_topics);
    header.at("alpha").get_to(m.alpha);
    header.at("beta").get_to(m.beta);
    header.at("seed").get_to(m.seed);
    header.at("iterations").get_to(m.iterations);
    header.at("vocab").at("terms").get_to(m.vocab.terms);
    header.at("vocab").at("doc_freq").get_to(m.vocab.doc_freq);
    header.at("vocab").at("config").get_to(m.vocab.config);
    if (header.at("V").get<std::size_t>() != m.vocab.terms.size())
      throw ModelFormatError("topic model vocabulary size mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("bad topic model header: ") + e.what());
  }
  pos += len;
  const std::size_t cells = m.num_topics * m.vocab.size();
  if (bytes.size() - pos != cells * 8) throw ModelFormatError("topic model matrix size mismatch");
  m.topic_word.resize(cells);
  for (auto& p : m.topic_word) p = std::bit_cast<double>(get(8));
  return m;
}

}  // namespace qualgate

#endif  // QUALGATE_TOPICS_HPP_
