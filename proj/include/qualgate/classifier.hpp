#ifndef QUALGATE_CLASSIFIER_HPP_
#define QUALGATE_CLASSIFIER_HPP_

// Binary logistic-regression quality filter over hashed n-gram features.
//
// Training minimizes
//
//   F(w, b) = R(w) + C * sum_i log(1 + exp(-y_i (w.x_i + b))),  y_i in {-1,+1}
//
// with R(w) = ||w||_1 or 0.5 ||w||_2^2 and the bias left unpenalized, using
// monotone FISTA with backtracking. One epoch is one full-gradient step.
// Training stops once an accepted step lowers F by less than tol relative to
// the previous objective, or after max_epochs.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include <zlib.h>

#include "json.hpp"
#include "qualgate/corpus.hpp"
#include "qualgate/csv.hpp"
#include "qualgate/errors.hpp"
#include "qualgate/featurize.hpp"
#include "qualgate/parallel.hpp"
#include "qualgate/random.hpp"

namespace qualgate {

enum class Regularization { l1, l2 };

inline std::string_view to_string(Regularization r) {
  return r == Regularization::l1 ? "L1" : "L2";
}

inline Regularization parse_regularization(std::string_view s) {
  if (s == "L1" || s == "l1") return Regularization::l1;
  if (s == "L2" || s == "l2") return Regularization::l2;
  throw ConfigError("regularization must be L1 or L2, got '" + std::string(s) + "'");
}

struct TrainConfig {
  Regularization regularization = Regularization::l1;
  double C = 0.977778;
  double tol = 0.000816;
  int max_epochs = 500;
  /// Recorded for provenance; the full-batch solver itself draws no randomness.
  std::uint64_t seed = 44555;
  FeaturizerConfig featurizer;

  void validate() const {
    if (!(C > 0.0) || !std::isfinite(C))
      throw ConfigError("C must be a positive finite number");
    if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tol must lie in (0, 1)");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    featurizer.validate();
  }

  bool operator==(const TrainConfig&) const = default;

  /// Keys: regularization, C, tol, max_epochs, seed, ngram_lo, ngram_hi,
  /// hash_dim, signed_hashing, l2_normalize, remove_stopwords,
  /// stopword_list_id; all in section [train]. Missing keys keep defaults.
  static TrainConfig from_config(const Config& cfg, const std::string& section = "train") {
    TrainConfig c;
    c.regularization = parse_regularization(
        cfg.get_string(section, "regularization", std::string(to_string(c.regularization))));
    c.C = cfg.get_double(section, "C", c.C);
    c.tol = cfg.get_double(section, "tol", c.tol);
    c.max_epochs = static_cast<int>(cfg.get_int(section, "max_epochs", c.max_epochs));
    c.seed = static_cast<std::uint64_t>(cfg.get_int(section, "seed", static_cast<long long>(c.seed)));
    auto& f = c.featurizer;
    f.ngram_lo = static_cast<int>(cfg.get_int(section, "ngram_lo", f.ngram_lo));
    f.ngram_hi = static_cast<int>(cfg.get_int(section, "ngram_hi", f.ngram_hi));
    f.hash_dim = static_cast<std::uint32_t>(cfg.get_int(section, "hash_dim", f.hash_dim));
    f.signed_hashing = cfg.get_bool(section, "signed_hashing", f.signed_hashing);
    f.l2_normalize = cfg.get_bool(section, "l2_normalize", f.l2_normalize);
    f.remove_stopwords = cfg.get_bool(section, "remove_stopwords", f.remove_stopwords);
    f.stopword_list_id = cfg.get_string(section, "stopword_list_id", f.stopword_list_id);
    c.validate();
    return c;
  }

  void write_to(Config& cfg, const std::string& section = "train") const {
    cfg.set(section, "regularization", std::string(to_string(regularization)));
    cfg.set(section, "C", csv::format_double(C));
    cfg.set(section, "tol", csv::format_double(tol));
    cfg.set(section, "max_epochs", std::to_string(max_epochs));
    cfg.set(section, "seed", std::to_string(seed));
    cfg.set(section, "ngram_lo", std::to_string(featurizer.ngram_lo));
    cfg.set(section, "ngram_hi", std::to_string(featurizer.ngram_hi));
    cfg.set(section, "hash_dim", std::to_string(featurizer.hash_dim));
    cfg.set(section, "signed_hashing", featurizer.signed_hashing ? "true" : "false");
    cfg.set(section, "l2_normalize", featurizer.l2_normalize ? "true" : "false");
    cfg.set(section, "remove_stopwords", featurizer.remove_stopwords ? "true" : "false");
    cfg.set(section, "stopword_list_id", featurizer.stopword_list_id);
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"regularization", std::string(to_string(c.regularization))},
                     {"C", c.C},
                     {"tol", c.tol},
                     {"max_epochs", c.max_epochs},
                     {"seed", c.seed},
                     {"featurizer", c.featurizer}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.regularization = parse_regularization(j.at("regularization").get<std::string>());
  j.at("C").get_to(c.C);
  j.at("tol").get_to(c.tol);
  j.at("max_epochs").get_to(c.max_epochs);
  j.at("seed").get_to(c.seed);
  j.at("featurizer").get_to(c.featurizer);
}

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  double threshold = 0.5;

  std::size_t total() const {
    return true_positive + false_positive + true_negative + false_negative;
  }

  bool operator==(const EvalReport&) const = default;
};

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"precision", r.precision},
                     {"recall", r.recall},
                     {"f1", r.f1},
                     {"accuracy", r.accuracy},
                     {"true_positive", r.true_positive},
                     {"false_positive", r.false_positive},
                     {"true_negative", r.true_negative},
                     {"false_negative", r.false_negative},
                     {"threshold", r.threshold}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("precision").get_to(r.precision);
  j.at("recall").get_to(r.recall);
  j.at("f1").get_to(r.f1);
  j.at("accuracy").get_to(r.accuracy);
  j.at("true_positive").get_to(r.true_positive);
  j.at("false_positive").get_to(r.false_positive);
  j.at("true_negative").get_to(r.true_negative);
  j.at("false_negative").get_to(r.false_negative);
  j.at("threshold").get_to(r.threshold);
}

inline EvalReport make_eval_report(std::size_t tp, std::size_t fp, std::size_t tn,
                                   std::size_t fn, double threshold) {
  EvalReport r;
  r.true_positive = tp;
  r.false_positive = fp;
  r.true_negative = tn;
  r.false_negative = fn;
  r.threshold = threshold;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  r.precision = tp + fp > 0 ? d(tp) / d(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? d(tp) / d(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  const std::size_t total = tp + fp + tn + fn;
  r.accuracy = total > 0 ? d(tp + tn) / d(total) : 0.0;
  return r;
}

inline double sigmoid(double margin) {
  if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

struct QualityScore {
  std::string doc_id;
  double p_high_quality = 0.5;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Trained filter. Weights are held densely over hash_dim for fast lookup;
/// the file stores only the nonzero entries.
class FilterModel {
 public:
  FilterModel() : FilterModel(TrainConfig{}) {}

  explicit FilterModel(TrainConfig cfg)
      : config_(std::move(cfg)),
        vectorizer_(config_.featurizer),
        weights_(config_.featurizer.hash_dim, 0.0) {}

  const TrainConfig& train_config() const noexcept { return config_; }
  const HashingVectorizer& vectorizer() const noexcept { return vectorizer_; }
  std::uint32_t format_version() const noexcept { return kModelFormatVersion; }

  double bias() const noexcept { return bias_; }
  void set_bias(double b) { bias_ = b; }

  const std::vector<double>& weights() const noexcept { return weights_; }
  void set_weight(std::uint32_t index, double w) {
    if (index >= weights_.size())
      throw ConfigError("weight index " + std::to_string(index) + " >= hash_dim");
    weights_[index] = w;
  }

  std::vector<FeatureEntry> nonzero_weights() const {
    std::vector<FeatureEntry> out;
    for (std::uint32_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] != 0.0) out.push_back({i, weights_[i]});
    return out;
  }

  const std::optional<EvalReport>& metrics() const noexcept { return metrics_; }
  void set_metrics(std::optional<EvalReport> m) { metrics_ = std::move(m); }

  double margin(const SparseFeatureVector& x) const {
    double m = bias_;
    for (const auto& e : x.entries) m += weights_[e.index] * e.weight;
    return m;
  }

  double score_text(std::string_view text, HashingVectorizer::Scratch& scratch,
                    SparseFeatureVector& features) const {
    vectorizer_.transform_into(text, scratch, features);
    return sigmoid(margin(features));
  }

  double score_text(std::string_view text) const {
    HashingVectorizer::Scratch scratch;
    SparseFeatureVector features;
    return score_text(text, scratch, features);
  }

 private:
  TrainConfig config_;
  HashingVectorizer vectorizer_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::optional<EvalReport> metrics_;
};

inline QualityScore score(const FilterModel& model, const Document& doc) {
  return {doc.id, model.score_text(doc.text)};
}

/// Scores in input order; output is identical for every thread count.
inline std::vector<double> score_texts(const FilterModel& model,
                                       std::span<const std::string_view> texts,
                                       unsigned threads = 1) {
  std::vector<double> out(texts.size());
  const unsigned workers = std::max(1u, threads);
  const std::size_t chunk = (texts.size() + workers - 1) / std::max<std::size_t>(workers, 1);
  parallel_for(workers, workers, [&](std::size_t w) {
    HashingVectorizer::Scratch scratch;
    SparseFeatureVector features;
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(texts.size(), begin + chunk);
    for (std::size_t i = begin; i < end; ++i)
      out[i] = model.score_text(texts[i], scratch, features);
  });
  return out;
}

inline std::vector<QualityScore> score_documents(const FilterModel& model,
                                                 const std::vector<Document>& docs,
                                                 unsigned threads = 1) {
  std::vector<std::string_view> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  auto p = score_texts(model, texts, threads);
  std::vector<QualityScore> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({docs[i].id, p[i]});
  return out;
}

inline EvalReport evaluate(const FilterModel& model, const std::vector<Document>& test_docs,
                           double threshold = 0.5, unsigned threads = 1) {
  if (test_docs.empty()) throw DataError("evaluate: empty test set");
  for (const auto& d : test_docs)
    if (!d.label) throw DataError("evaluate: document '" + d.id + "' has no label");
  const auto scores = score_documents(model, test_docs, threads);
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < test_docs.size(); ++i) {
    const bool predicted = scores[i].p_high_quality >= threshold;
    const bool actual = *test_docs[i].label == Label::positive;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return make_eval_report(tp, fp, tn, fn, threshold);
}

// ---------------------------------------------------------------------------
// Training

/// Row-compressed design restricted to the hash columns that occur in the
/// training set (others never leave zero under either penalty).
struct TrainingMatrix {
  std::vector<std::uint32_t> columns;  // compact column -> hash index
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;  // compact
  std::vector<double> values;
  std::vector<double> labels;  // +1 / -1

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return columns.size(); }
};

inline TrainingMatrix build_training_matrix(const std::vector<SparseFeatureVector>& rows,
                                            const std::vector<double>& labels) {
  TrainingMatrix m;
  m.labels = labels;
  for (const auto& r : rows)
    for (const auto& e : r.entries) m.columns.push_back(e.index);
  std::sort(m.columns.begin(), m.columns.end());
  m.columns.erase(std::unique(m.columns.begin(), m.columns.end()), m.columns.end());
  for (const auto& r : rows) {
    for (const auto& e : r.entries) {
      const auto it = std::lower_bound(m.columns.begin(), m.columns.end(), e.index);
      m.col_idx.push_back(static_cast<std::uint32_t>(it - m.columns.begin()));
      m.values.push_back(e.weight);
    }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

inline TrainingMatrix featurize_training_set(const std::vector<Document>& docs,
                                             const FeaturizerConfig& cfg,
                                             unsigned threads = 1) {
  HashingVectorizer vec(cfg);
  std::vector<SparseFeatureVector> rows(docs.size());
  std::vector<double> labels(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].label) throw DataError("training document '" + docs[i].id + "' has no label");
    labels[i] = *docs[i].label == Label::positive ? 1.0 : -1.0;
  }
  parallel_for(docs.size(), threads, [&](std::size_t i) { rows[i] = vec.transform(docs[i].text); });
  return build_training_matrix(rows, labels);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// C * sum_i log(1 + exp(-y_i m_i)) where m = Xw + b.
inline double logistic_loss(const TrainingMatrix& X, std::span<const double> w, double b,
                            double C) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double m = b;
    for (std::size_t k = X.row_ptr[i]; k < X.row_ptr[i + 1]; ++k)
      m += X.values[k] * w[X.col_idx[k]];
    loss += softplus(-X.labels[i] * m);
  }
  return C * loss;
}

/// Loss as above plus its gradient in (grad_w, grad_b).
inline double logistic_loss_gradient(const TrainingMatrix& X, std::span<const double> w,
                                     double b, double C, std::vector<double>& grad_w,
                                     double& grad_b) {
  grad_w.assign(X.cols(), 0.0);
  grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double m = b;
    for (std::size_t k = X.row_ptr[i]; k < X.row_ptr[i + 1]; ++k)
      m += X.values[k] * w[X.col_idx[k]];
    const double ym = X.labels[i] * m;
    loss += softplus(-ym);
    // d/dm softplus(-y m) = -y * sigmoid(-y m)
    const double r = -X.labels[i] * sigmoid(-ym);
    for (std::size_t k = X.row_ptr[i]; k < X.row_ptr[i + 1]; ++k)
      grad_w[X.col_idx[k]] += r * X.values[k];
    grad_b += r;
  }
  for (auto& g : grad_w) g *= C;
  grad_b *= C;
  return C * loss;
}

inline double penalty(Regularization reg, std::span<const double> w) {
  double s = 0.0;
  if (reg == Regularization::l1) {
    for (double v : w) s += std::fabs(v);
  } else {
    for (double v : w) s += v * v;
    s *= 0.5;
  }
  return s;
}

struct TrainTrace {
  /// Objective after every epoch (non-increasing).
  std::vector<double> objective;
  int epochs = 0;
  bool converged = false;
  double lipschitz = 0.0;
};

struct TrainResult {
  FilterModel model;
  TrainTrace trace;
};

/// Monotone FISTA on an already featurized matrix.
inline TrainResult train_matrix(const TrainingMatrix& X, const TrainConfig& cfg) {
  cfg.validate();
  bool has_pos = false, has_neg = false;
  for (double y : X.labels) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DataError("training data must contain both positive and negative documents");

  const std::size_t d = X.cols();
  const double C = cfg.C;
  const auto reg = cfg.regularization;

  // Lower bound on the Lipschitz constant: the largest row norm (with the
  // bias column) bounds the top eigenvalue of X'X from below.
  double max_row = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double s = 1.0;
    for (std::size_t k = X.row_ptr[i]; k < X.row_ptr[i + 1]; ++k) s += X.values[k] * X.values[k];
    max_row = std::max(max_row, s);
  }
  double L = 0.25 * C * max_row;

  std::vector<double> x(d, 0.0), x_prev(d, 0.0), y(d, 0.0), z(d), grad;
  double xb = 0.0, xb_prev = 0.0, yb = 0.0, zb = 0.0, grad_b = 0.0;
  double t = 1.0;

  auto objective = [&](std::span<const double> w, double b) {
    return logistic_loss(X, w, b, C) + penalty(reg, w);
  };
  auto prox = [&](double step) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = y[j] - step * grad[j];
      if (reg == Regularization::l1) {
        const double mag = std::fabs(v) - step;
        z[j] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
      } else {
        z[j] = v / (1.0 + step);
      }
    }
    zb = yb - step * grad_b;
  };

  TrainTrace trace;
  double fx = objective(x, xb);
  trace.objective.push_back(fx);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double fy = logistic_loss_gradient(X, y, yb, C, grad, grad_b);
    double fz_smooth = 0.0;
    for (int attempt = 0;; ++attempt) {
      prox(1.0 / L);
      fz_smooth = logistic_loss(X, z, zb, C);
      double lin = grad_b * (zb - yb);
      double quad = (zb - yb) * (zb - yb);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = z[j] - y[j];
        lin += grad[j] * diff;
        quad += diff * diff;
      }
      if (fz_smooth <= fy + lin + 0.5 * L * quad * (1.0 + 1e-12) + 1e-12 * std::fabs(fy)) break;
      if (attempt > 100) throw NumericError("backtracking failed at epoch " + std::to_string(epoch));
      L *= 2.0;
    }
    const double fz = fz_smooth + penalty(reg, z);
    if (!std::isfinite(fz))
      throw NumericError("non-finite objective at epoch " + std::to_string(epoch));

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const bool accepted = fz <= fx;
    x_prev = x;
    xb_prev = xb;
    if (accepted) {
      x = z;
      xb = zb;
    }
    const double f_prev = fx;
    const double f_new = accepted ? fz : fx;
    // y = x + (t/t') (z - x) + ((t-1)/t') (x - x_prev)
    for (std::size_t j = 0; j < d; ++j)
      y[j] = x[j] + (t / t_next) * (z[j] - x[j]) + ((t - 1.0) / t_next) * (x[j] - x_prev[j]);
    yb = xb + (t / t_next) * (zb - xb) + ((t - 1.0) / t_next) * (xb - xb_prev);
    t = t_next;
    fx = f_new;
    trace.objective.push_back(fx);
    trace.epochs = epoch;

    if (accepted && (f_prev - f_new) <= cfg.tol * std::max(std::fabs(f_prev), 1e-300)) {
      trace.converged = true;
      break;
    }
  }
  trace.lipschitz = L;

  TrainResult out{FilterModel(cfg), std::move(trace)};
  for (std::size_t j = 0; j < d; ++j)
    if (x[j] != 0.0) out.model.set_weight(X.columns[j], x[j]);
  out.model.set_bias(xb);
  return out;
}

inline TrainResult train_with_trace(const std::vector<Document>& train_docs,
                                    const TrainConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  return train_matrix(featurize_training_set(train_docs, cfg.featurizer, threads), cfg);
}

inline FilterModel train(const std::vector<Document>& train_docs, const TrainConfig& cfg,
                         unsigned threads = 1) {
  return train_with_trace(train_docs, cfg, threads).model;
}

// ---------------------------------------------------------------------------
// Model file
//
//   offset  size  field
//   0       8     magic "QUALGATE"
//   8       4     format_version (u32 LE)
//   12      4     CRC-32 of the payload (u32 LE, zlib polynomial)
//   16      8     payload length in bytes (u64 LE)
//   24      ...   payload:
//                   u32 LE  config length, then that many bytes of canonical
//                           JSON {"format_version","metrics","train_config"}
//                   f64 LE  bias (IEEE-754 bits)
//                   u64 LE  nonzero weight count
//                   repeated (u32 LE index, f64 LE weight), strictly
//                           increasing index, every index < hash_dim

namespace detail {

inline std::uint32_t crc32_bytes(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

template <typename T>
void put_le(std::string& out, T v) {
  std::uint64_t bits;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ModelFormatError("model file truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace detail

inline constexpr std::string_view kModelMagic = "QUALGATE";

inline std::string serialize_model(const FilterModel& model) {
  nlohmann::json header{{"format_version", kModelFormatVersion},
                        {"train_config", model.train_config()},
                        {"metrics", nullptr}};
  if (model.metrics()) header["metrics"] = *model.metrics();
  const std::string config = header.dump();

  std::string payload;
  detail::put_le<std::uint32_t>(payload, static_cast<std::uint32_t>(config.size()));
  payload += config;
  detail::put_le<double>(payload, model.bias());
  const auto nz = model.nonzero_weights();
  detail::put_le<std::uint64_t>(payload, nz.size());
  for (const auto& e : nz) {
    detail::put_le<std::uint32_t>(payload, e.index);
    detail::put_le<double>(payload, e.weight);
  }

  std::string out(kModelMagic);
  detail::put_le<std::uint32_t>(out, kModelFormatVersion);
  detail::put_le<std::uint32_t>(out, detail::crc32_bytes(payload));
  detail::put_le<std::uint64_t>(out, payload.size());
  out += payload;
  return out;
}

inline FilterModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < 24 || bytes.substr(0, 8) != kModelMagic)
    throw ModelFormatError("not a qualgate model file (bad magic)");
  std::size_t pos = 8;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kModelFormatVersion)
    throw ModelFormatError("unsupported model format version " + std::to_string(version) +
                           " (this build reads version " +
                           std::to_string(kModelFormatVersion) + ")");
  const auto crc = detail::get_le<std::uint32_t>(bytes, pos);
  const auto length = detail::get_le<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos != length) throw ModelFormatError("model payload length mismatch");
  const std::string_view payload = bytes.substr(pos);
  if (detail::crc32_bytes(payload) != crc) throw ModelFormatError("model checksum mismatch");

  pos = 0;
  const auto config_len = detail::get_le<std::uint32_t>(payload, pos);
  if (pos + config_len > payload.size()) throw ModelFormatError("model file truncated");
  nlohmann::json header;
  TrainConfig cfg;
  std::optional<EvalReport> metrics;
  try {
    header = nlohmann::json::parse(payload.substr(pos, config_len));
    cfg = header.at("train_config").get<TrainConfig>();
    if (!header.at("metrics").is_null()) metrics = header.at("metrics").get<EvalReport>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("bad model header: ") + e.what());
  }
  pos += config_len;
  cfg.validate();

  FilterModel model(cfg);
  model.set_metrics(metrics);
  model.set_bias(detail::get_le<double>(payload, pos));
  const auto count = detail::get_le<std::uint64_t>(payload, pos);
  std::int64_t last = -1;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto index = detail::get_le<std::uint32_t>(payload, pos);
    const auto w = detail::get_le<double>(payload, pos);
    if (static_cast<std::int64_t>(index) <= last || index >= cfg.featurizer.hash_dim)
      throw ModelFormatError("bad weight index " + std::to_string(index));
    last = index;
    model.set_weight(index, w);
  }
  if (pos != payload.size()) throw ModelFormatError("trailing bytes in model payload");
  return model;
}

inline void save_model(const FilterModel& model, const std::string& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model " + path);
}

inline FilterModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

// ---------------------------------------------------------------------------
// Random hyperparameter search

struct SearchSpace {
  std::vector<Regularization> regularization{Regularization::l1, Regularization::l2};
  double c_lo = 0.0, c_hi = 1.0;            // uniform-float
  double tol_lo = 1e-4, tol_hi = 1e-2;      // log-uniform
  std::vector<std::pair<int, int>> ngram_ranges{{1, 2}, {1, 3}, {2, 3}};
  std::int64_t random_state_lo = 0, random_state_hi = 100000;  // uniform-int, inclusive
  std::vector<bool> remove_stopwords{true, false};
};

struct TrialResult {
  std::size_t index = 0;
  TrainConfig config;
  double val_f1 = 0.0;
  double wall_seconds = 0.0;
  bool ok = false;
  std::string error;
};

/// Draws trial `index`'s configuration. Each trial has its own stream keyed
/// by (seed, index), so trials can be sampled or run in any order.
inline TrainConfig sample_trial(const SearchSpace& space, const TrainConfig& base,
                                std::uint64_t seed, std::size_t index) {
  Rng rng = make_rng({seed, 0x5ea7c4ull, index});
  TrainConfig c = base;
  c.regularization = space.regularization[uniform_below(rng, space.regularization.size())];
  c.C = uniform_real(rng, space.c_lo, space.c_hi);
  c.tol = log_uniform(rng, space.tol_lo, space.tol_hi);
  const auto& ngram = space.ngram_ranges[uniform_below(rng, space.ngram_ranges.size())];
  c.featurizer.ngram_lo = ngram.first;
  c.featurizer.ngram_hi = ngram.second;
  c.seed = static_cast<std::uint64_t>(uniform_int(rng, space.random_state_lo, space.random_state_hi));
  c.featurizer.remove_stopwords =
      space.remove_stopwords[uniform_below(rng, space.remove_stopwords.size())];
  return c;
}

struct SearchResult {
  FilterModel best;
  std::size_t best_index = 0;
  std::vector<TrialResult> trials;
};

/// Trains one model per sampled configuration and keeps the best validation
/// F1 (ties go to the lowest trial index). Failed trials are recorded and
/// skipped; the search fails only if every trial does.
inline SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                                  const std::vector<Document>& train_docs,
                                  const std::vector<Document>& val_docs, std::uint64_t seed,
                                  const TrainConfig& base = TrainConfig{}, unsigned threads = 1) {
  if (n_trials < 1) throw ConfigError("random_search needs at least one trial");
  if (val_docs.empty()) throw DataError("random_search: empty validation set");

  std::vector<TrialResult> trials(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) {
    trials[i].index = i;
    trials[i].config = sample_trial(space, base, seed, i);
  }

  // Featurization depends only on (ngram range, stopwords); share it.
  using Key = std::tuple<int, int, bool>;
  std::map<Key, TrainingMatrix> matrices;
  for (const auto& t : trials) {
    const auto& f = t.config.featurizer;
    Key key{f.ngram_lo, f.ngram_hi, f.remove_stopwords};
    if (!matrices.contains(key)) matrices.emplace(key, featurize_training_set(train_docs, f, threads));
  }

  std::vector<std::optional<FilterModel>> models(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t i) {
    auto& trial = trials[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto& f = trial.config.featurizer;
      auto result = train_matrix(matrices.at(Key{f.ngram_lo, f.ngram_hi, f.remove_stopwords}),
                                 trial.config);
      trial.val_f1 = evaluate(result.model, val_docs).f1;
      trial.ok = true;
      models[i].emplace(std::move(result.model));
    } catch (const Error& e) {
      trial.error = e.what();
    }
    trial.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  std::optional<std::size_t> best;
  for (const auto& t : trials)
    if (t.ok && (!best || t.val_f1 > trials[*best].val_f1)) best = t.index;
  if (!best) throw Error("random_search: all " + std::to_string(n_trials) + " trials failed");

  SearchResult out{std::move(*models[*best]), *best, std::move(trials)};
  return out;
}

inline const std::vector<std::string>& trial_log_header() {
  static const std::vector<std::string> header{
      "trial", "regularization", "C", "tol", "ngram_lo", "ngram_hi", "random_state",
      "remove_stopwords", "val_f1", "wall_seconds", "status", "search_seed"};
  return header;
}

inline void write_trial_log(std::ostream& out, const std::vector<TrialResult>& trials,
                            std::uint64_t search_seed) {
  csv::write_row(out, trial_log_header());
  for (const auto& t : trials) {
    const auto& c = t.config;
    csv::write_row(out, {std::to_string(t.index), std::string(to_string(c.regularization)),
                         csv::format_double(c.C), csv::format_double(c.tol),
                         std::to_string(c.featurizer.ngram_lo),
                         std::to_string(c.featurizer.ngram_hi), std::to_string(c.seed),
                         c.featurizer.remove_stopwords ? "yes" : "no",
                         t.ok ? csv::format_double(t.val_f1) : "",
                         csv::format_double(t.wall_seconds), t.ok ? "ok" : "failed: " + t.error,
                         std::to_string(search_seed)});
  }
}

}  // namespace qualgate

#endif  // QUALGATE_CLASSIFIER_HPP_
