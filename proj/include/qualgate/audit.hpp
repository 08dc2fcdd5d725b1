#ifndef QUALGATE_AUDIT_HPP_
#define QUALGATE_AUDIT_HPP_

// Audit pipelines over quality scores:
//   * document level: regress P(high quality) on topic shares, pronoun use
//     and log2 document length;
//   * school level: regress the average school score on joined demographic
//     covariates after filtering and imputation;
//   * alignment: compare score distributions between groups (KS), regress on
//     essay score band and prompt, or summarize per-genre distributions.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qualgate/classifier.hpp"
#include "qualgate/config.hpp"
#include "qualgate/corpus.hpp"
#include "qualgate/csv.hpp"
#include "qualgate/errors.hpp"
#include "qualgate/featurize.hpp"
#include "qualgate/parallel.hpp"
#include "qualgate/stats.hpp"
#include "qualgate/topics.hpp"

namespace qualgate {

// ---------------------------------------------------------------------------
// Pronouns

inline const std::set<std::string, std::less<>>& first_second_person_pronouns() {
  static const std::set<std::string, std::less<>> words{
      "i",  "me",   "my",     "mine",     "myself",   "we",    "us",        "our",
      "ours", "ourselves", "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

inline const std::set<std::string, std::less<>>& third_person_pronouns() {
  static const std::set<std::string, std::less<>> words{
      "he",  "him",    "his", "himself", "she",  "her",  "hers",  "herself",
      "it",  "its",    "itself", "they", "them", "their", "theirs", "themselves"};
  return words;
}

struct PronounFlags {
  bool first_second = false;
  bool third = false;

  bool operator==(const PronounFlags&) const = default;
};

inline bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

/// Whole-token, case-insensitive match after trimming ASCII punctuation from
/// both ends of each whitespace token.
inline PronounFlags pronoun_flags(std::string_view text) {
  PronounFlags flags;
  std::string lowered;
  for_each_token(text, [&](std::string_view tok) {
    while (!tok.empty() && is_ascii_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && is_ascii_punct(tok.back())) tok.remove_suffix(1);
    if (tok.empty()) return;
    lowered.assign(tok);
    for (auto& c : lowered)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (first_second_person_pronouns().contains(lowered)) flags.first_second = true;
    if (third_person_pronouns().contains(lowered)) flags.third = true;
  });
  return flags;
}

// ---------------------------------------------------------------------------
// Report

struct Histogram {
  std::string group;
  std::vector<std::size_t> counts;  // 20 equal bins over [0, 1]

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

inline constexpr std::size_t kHistogramBins = 20;

struct GroupSummary {
  std::string group;
  std::size_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

struct NamedCorrelation {
  std::string feature;
  CorrelationResult result;
};

struct ImputationCount {
  std::string feature;
  std::string source;
  std::size_t count = 0;
};

struct AuditReport {
  std::string analysis;
  std::string title;
  std::string observation_unit = "documents";
  std::optional<RegressionResult> regression;
  /// Display label per regression coefficient, same order.
  std::vector<std::string> coefficient_labels;
  std::optional<KsResult> ks;
  std::vector<NamedCorrelation> correlations;
  std::vector<Histogram> histograms;
  std::vector<GroupSummary> summaries;
  std::vector<std::pair<std::string, std::string>> config;
  Attrition attrition;
  std::vector<DroppedGroup> dropped;
  std::vector<ImputationCount> imputations;
  std::string verdict;
  int digits = 3;
};

inline Histogram make_histogram(std::string group, std::span<const double> scores) {
  return {std::move(group), histogram(scores, kHistogramBins, 0.0, 1.0)};
}

inline GroupSummary summarize(std::string group, std::vector<double> scores) {
  if (scores.empty()) throw DataError("summary of empty group '" + group + "'");
  std::sort(scores.begin(), scores.end());
  GroupSummary s;
  s.group = std::move(group);
  s.n = scores.size();
  double sum = 0.0;
  for (double v : scores) sum += v;
  s.mean = std::clamp(sum / static_cast<double>(s.n), scores.front(), scores.back());
  s.min = scores.front();
  s.max = scores.back();
  s.q25 = quantile_sorted(scores, 0.25);
  s.median = quantile_sorted(scores, 0.5);
  s.q75 = quantile_sorted(scores, 0.75);
  return s;
}

namespace detail {

inline std::unordered_map<std::string, double> score_index(const std::vector<QualityScore>& scores) {
  std::unordered_map<std::string, double> out;
  for (const auto& s : scores)
    if (!out.emplace(s.doc_id, s.p_high_quality).second)
      throw DataError("duplicate score for document '" + s.doc_id + "'");
  return out;
}

inline double lookup_score(const std::unordered_map<std::string, double>& index,
                           const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw DataError("no score for document '" + id + "'");
  return it->second;
}

inline void require_varying(const DesignMatrix& X) {
  for (std::size_t c = 0; c < X.columns.size(); ++c) {
    const auto& col = X.columns[c];
    if (col.empty()) continue;
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); }))
      throw NumericError("degenerate feature column (constant): " + X.column_labels[c]);
  }
}

inline void require_varying_response(std::span<const double> y) {
  if (!y.empty() && std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); }))
    throw NumericError("dependent variable has zero variance (all scores identical)");
}

inline std::string fmt(double v) { return csv::format_double(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Document-level audit

struct DocFeatureRow {
  std::string doc_id;
  std::vector<double> topic_shares;  // K - 1, omitted topic removed
  bool has_first_or_second_pronoun = false;
  bool has_third_pronoun = false;
  double log2_token_count = 0.0;
};

inline constexpr std::string_view kFirstSecondPronounLabel = "Presence of first/second person pronoun";
inline constexpr std::string_view kThirdPronounLabel = "Presence of third person pronoun";
inline constexpr std::string_view kLog2TokensLabel = "log2(Number of tokens)";

struct DocAuditOptions {
  std::size_t omitted_topic = 0;
  /// Display label per topic; "Topic k" when empty.
  std::vector<std::string> topic_labels;
  int digits = 3;
};

/// Regression on precomputed topic shares. Rows are processed in doc-id
/// order, so input order does not affect the output.
inline AuditReport doc_level_audit_from_topics(const std::vector<Document>& docs,
                                               const std::vector<QualityScore>& scores,
                                               const std::vector<DocTopics>& topics,
                                               const DocAuditOptions& opt) {
  if (docs.size() != topics.size())
    throw ConfigError("doc_level_audit: one DocTopics per document required");
  if (docs.empty()) throw DataError("doc_level_audit: no documents");
  const std::size_t K = topics.front().proportions.size();
  if (opt.omitted_topic >= K)
    throw ConfigError("omitted topic " + std::to_string(opt.omitted_topic) + " >= K=" +
                      std::to_string(K));
  const auto index = detail::score_index(scores);

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return docs[a].id < docs[b].id; });

  std::vector<DocFeatureRow> rows;
  std::vector<double> y, token_counts;
  std::vector<std::string> ids;
  for (std::size_t i : order) {
    const auto& d = docs[i];
    if (topics[i].proportions.size() != K) throw ConfigError("inconsistent topic count");
    DocFeatureRow row;
    row.doc_id = d.id;
    for (std::size_t k = 0; k < K; ++k)
      if (k != opt.omitted_topic) row.topic_shares.push_back(topics[i].proportions[k]);
    const auto flags = pronoun_flags(d.text);
    row.has_first_or_second_pronoun = flags.first_second;
    row.has_third_pronoun = flags.third;
    token_counts.push_back(static_cast<double>(d.token_count()));
    ids.push_back(d.id);
    y.push_back(detail::lookup_score(index, d.id));
    rows.push_back(std::move(row));
  }
  const auto log_tokens = log2_transform(token_counts, ids, 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].log2_token_count = log_tokens[r];

  DesignMatrix X;
  X.row_labels = ids;
  std::vector<std::string> labels{std::string(kInterceptName)};
  for (std::size_t k = 0, col = 0; k < K; ++k) {
    if (k == opt.omitted_topic) continue;
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.topic_shares[col]);
    X.add_column("topic_" + std::to_string(k), std::move(v));
    labels.push_back(k < opt.topic_labels.size() ? opt.topic_labels[k] : "Topic " + std::to_string(k));
    ++col;
  }
  {
    std::vector<double> fs, th;
    for (const auto& r : rows) {
      fs.push_back(r.has_first_or_second_pronoun ? 1.0 : 0.0);
      th.push_back(r.has_third_pronoun ? 1.0 : 0.0);
    }
    X.add_column("first_second_pronoun", std::move(fs));
    labels.emplace_back(kFirstSecondPronounLabel);
    X.add_column("third_pronoun", std::move(th));
    labels.emplace_back(kThirdPronounLabel);
  }
  X.add_column("log2_tokens", log_tokens);
  labels.emplace_back(kLog2TokensLabel);

  detail::require_varying_response(y);
  detail::require_varying(X);

  AuditReport report;
  report.analysis = "doc_level";
  report.title = "Regression of document quality score on document features";
  report.observation_unit = "documents";
  report.regression = ols_fit(X, y);
  report.coefficient_labels = std::move(labels);
  report.digits = opt.digits;
  report.histograms.push_back(make_histogram("all", y));
  report.attrition.input = docs.size();
  report.attrition.retained = docs.size();
  report.config = {{"omitted_topic", std::to_string(opt.omitted_topic)},
                   {"num_topics", std::to_string(K)}};
  return report;
}

/// Labels of the form "Topic k (w1, w2, w3)".
inline std::vector<std::string> topic_labels(const TopicModel& model, std::size_t words = 3) {
  const auto top = top_words(model, std::min(words, model.vocab_size()));
  std::vector<std::string> out;
  for (std::size_t k = 0; k < top.size(); ++k) {
    std::string label = "Topic " + std::to_string(k) + " (";
    for (std::size_t i = 0; i < top[k].size(); ++i) label += (i ? ", " : "") + top[k][i];
    out.push_back(label + ")");
  }
  return out;
}

/// Infers topic shares for every document (parallel, per-document seeds),
/// then runs the regression.
inline AuditReport doc_level_audit(const std::vector<Document>& docs,
                                   const std::vector<QualityScore>& scores,
                                   const TopicModel& model, std::size_t omitted_topic,
                                   unsigned threads = 1, int digits = 3) {
  std::vector<DocTopics> topics(docs.size());
  parallel_for(docs.size(), threads,
               [&](std::size_t i) { topics[i] = infer_doc_topics(model, docs[i].id, docs[i].text); });
  DocAuditOptions opt;
  opt.omitted_topic = omitted_topic;
  opt.topic_labels = topic_labels(model);
  opt.digits = digits;
  auto report = doc_level_audit_from_topics(docs, scores, topics, opt);
  std::size_t empty = 0;
  for (const auto& t : topics) empty += t.empty ? 1 : 0;
  report.config.emplace_back("topic_model_seed", std::to_string(model.seed));
  report.config.emplace_back("docs_without_vocabulary_tokens", std::to_string(empty));
  return report;
}

// ---------------------------------------------------------------------------
// Demographic audit

enum class Aggregation { mean, median };

/// Mean (or median) score per group_id, sorted by group. Documents without a
/// group are ignored.
inline std::vector<GroupScoreRow> group_scores(const std::vector<Document>& docs,
                                               const std::vector<QualityScore>& scores,
                                               Aggregation agg = Aggregation::mean) {
  const auto index = detail::score_index(scores);
  std::map<std::string, std::vector<double>> groups;
  for (const auto& d : docs)
    if (d.group_id) groups[*d.group_id].push_back(detail::lookup_score(index, d.id));
  std::vector<GroupScoreRow> out;
  for (auto& [id, values] : groups) {
    const auto s = summarize(id, values);
    out.push_back({id, agg == Aggregation::mean ? s.mean : s.median, values.size()});
  }
  return out;
}

struct DemographicFeature {
  std::string name;   // SchoolRecord field
  std::string label;  // display
  bool log2 = false;
};

inline const std::vector<DemographicFeature>& base_demographic_features() {
  static const std::vector<DemographicFeature> features{
      {"pct_rural", "% Rural", false},
      {"pct_bachelor", "% Adults ≥ Bachelor Deg.", false},
      {"median_home_value", "log2(Median Home Value)", true},
      {"n_students", "log2(Number of students)", true},
      {"student_teacher_ratio", "log2(Student:Teacher ratio)", true},
      {"is_public", "Is Public", false},
      {"is_magnet", "Is Magnet", false},
      {"is_charter", "Is Charter", false}};
  return features;
}

inline std::vector<DemographicFeature> demographic_feature_set(std::string_view name) {
  auto features = base_demographic_features();
  if (name == "base") return features;
  if (name == "race") {
    features.push_back({"pct_asian", "% Asian Students", false});
    features.push_back({"pct_mixed", "% Mixed Students", false});
    features.push_back({"pct_black", "% Black Students", false});
    features.push_back({"pct_hispanic", "% Hispanic Students", false});
    return features;
  }
  if (name == "gop") {
    features.push_back({"pct_gop_2016", "% GOP vote share", false});
    return features;
  }
  throw ConfigError("unknown feature set '" + std::string(name) + "' (base, race, gop)");
}

struct DemographicConfig {
  SchoolFilters filters;
  std::string feature_set = "base";
  std::vector<DemographicFeature> features = base_demographic_features();
  Aggregation aggregation = Aggregation::mean;
  int digits = 3;

  /// Sections [filters] (min_articles, max_home_value or "none",
  /// require_school_size), [features] (set), [aggregation] (method),
  /// [report] (digits).
  static DemographicConfig from_config(const Config& cfg) {
    DemographicConfig c;
    c.filters.min_articles =
        static_cast<std::size_t>(cfg.get_int("filters", "min_articles", 100));
    const auto cap = cfg.get_string("filters", "max_home_value", "1000000");
    if (cap == "none" || cap.empty())
      c.filters.max_home_value.reset();
    else
      c.filters.max_home_value = cfg.get_double("filters", "max_home_value", 1e6);
    c.filters.require_school_size = cfg.get_bool("filters", "require_school_size", true);
    c.feature_set = cfg.get_string("features", "set", "base");
    c.features = demographic_feature_set(c.feature_set);
    const auto agg = cfg.get_string("aggregation", "method", "mean");
    if (agg == "mean")
      c.aggregation = Aggregation::mean;
    else if (agg == "median")
      c.aggregation = Aggregation::median;
    else
      throw ConfigError("aggregation.method must be mean or median");
    c.digits = static_cast<int>(cfg.get_int("report", "digits", 3));
    return c;
  }

  std::vector<std::pair<std::string, std::string>> resolved() const {
    return {{"filters.min_articles", std::to_string(filters.min_articles)},
            {"filters.max_home_value",
             filters.max_home_value ? detail::fmt(*filters.max_home_value) : "none"},
            {"filters.require_school_size", filters.require_school_size ? "true" : "false"},
            {"features.set", feature_set},
            {"aggregation.method", aggregation == Aggregation::mean ? "mean" : "median"},
            {"report.digits", std::to_string(digits)}};
  }
};

/// Join, filter, impute (ZIP -> county -> state -> global medians), log2
/// transform the size/ratio/home-value covariates and regress the group
/// score on the configured features.
inline AuditReport demographic_audit(const std::vector<GroupScoreRow>& groups,
                                     const std::vector<SchoolRecord>& records,
                                     const DemographicConfig& cfg) {
  auto joined = join_school_metadata(groups, records, cfg.filters);
  const auto& rows = joined.rows;
  const std::size_t p = cfg.features.size();
  if (rows.size() <= p + 1)
    throw NumericError("demographic audit: " + std::to_string(rows.size()) +
                       " schools after filtering, need more than " + std::to_string(p + 1));

  std::vector<std::string> names;
  for (const auto& f : cfg.features) names.push_back(f.name);
  auto table = school_feature_table(rows, names);

  AuditReport report;
  for (const auto& f : cfg.features) {
    auto imputed = impute_missing(std::move(table), f.name);
    table = std::move(imputed.table);
    std::map<ImputeSource, std::size_t> counts;
    for (auto s : imputed.provenance)
      if (s != ImputeSource::observed) ++counts[s];
    for (auto [source, n] : counts)
      report.imputations.push_back({f.name, std::string(to_string(source)), n});
  }

  DesignMatrix X;
  X.row_labels = table.row_ids;
  std::vector<std::string> labels{std::string(kInterceptName)};
  for (const auto& f : cfg.features) {
    std::vector<double> values;
    for (const auto& v : table.column(f.name)) values.push_back(*v);
    if (f.log2) values = log2_transform(values, table.row_ids, 1e-300);
    X.add_column(f.name, std::move(values));
    labels.push_back(f.label);
  }
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(r.mean_p_high_quality);
  detail::require_varying_response(y);
  detail::require_varying(X);

  report.analysis = "demographic";
  report.title = "Regression of average school quality score on demographic features";
  report.observation_unit = "schools";
  report.regression = ols_fit(X, y);
  report.coefficient_labels = std::move(labels);
  report.digits = cfg.digits;
  for (std::size_t c = 0; c < X.columns.size(); ++c) {
    try {
      report.correlations.push_back({X.column_labels[c], pearson(X.columns[c], y)});
    } catch (const NumericError&) {
    }
  }
  report.histograms.push_back(make_histogram("schools", y));
  report.attrition = joined.attrition;
  report.dropped = std::move(joined.dropped);
  report.config = cfg.resolved();
  return report;
}

// ---------------------------------------------------------------------------
// Alignment audits

struct AlignmentItem {
  std::string id;
  std::string group;                 // factuality level, prompt, genre...
  std::optional<std::string> band;   // low / medium / high
  std::optional<double> rating;      // numeric essay score, if any
  double p_high_quality = 0.0;
};

enum class AlignmentMode { ks_two_group, score_prompt_regression, genre_distributions };

inline AlignmentMode parse_alignment_mode(std::string_view s) {
  if (s == "ks" || s == "ks_two_group") return AlignmentMode::ks_two_group;
  if (s == "prompt-regression" || s == "score_prompt_regression")
    return AlignmentMode::score_prompt_regression;
  if (s == "genre" || s == "genre_distributions") return AlignmentMode::genre_distributions;
  throw ConfigError("unknown alignment mode '" + std::string(s) + "'");
}

inline std::string_view to_string(AlignmentMode m) {
  switch (m) {
    case AlignmentMode::ks_two_group: return "ks_two_group";
    case AlignmentMode::score_prompt_regression: return "score_prompt_regression";
    case AlignmentMode::genre_distributions: return "genre_distributions";
  }
  return "?";
}

struct AlignmentConfig {
  AlignmentMode mode = AlignmentMode::ks_two_group;
  /// Significance level for the KS verdict.
  double alpha = 0.05;
  /// Prompt used as the omitted baseline; lexicographically first if empty.
  std::string baseline_prompt;
  /// Numeric ratings map to bands: rating < low_below -> low,
  /// rating >= high_from -> high, else medium.
  double low_below = 2.5;
  double high_from = 4.0;
  int digits = 4;

  std::vector<std::pair<std::string, std::string>> resolved() const {
    return {{"mode", std::string(to_string(mode))},
            {"alpha", detail::fmt(alpha)},
            {"baseline_prompt", baseline_prompt},
            {"low_below", detail::fmt(low_below)},
            {"high_from", detail::fmt(high_from)},
            {"digits", std::to_string(digits)}};
  }
};

namespace detail {

inline std::map<std::string, std::vector<double>> scores_by_group(
    const std::vector<AlignmentItem>& items) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& it : items) out[it.group].push_back(it.p_high_quality);
  return out;
}

inline std::string band_of(const AlignmentItem& item, const AlignmentConfig& cfg) {
  if (item.band) {
    if (*item.band != "low" && *item.band != "medium" && *item.band != "high")
      throw DataError("item '" + item.id + "': band must be low, medium or high");
    return *item.band;
  }
  if (!item.rating) throw DataError("item '" + item.id + "' has neither band nor rating");
  if (*item.rating < cfg.low_below) return "low";
  if (*item.rating >= cfg.high_from) return "high";
  return "medium";
}

}  // namespace detail

inline AuditReport alignment_audit(std::vector<AlignmentItem> items, const AlignmentConfig& cfg) {
  if (items.empty()) throw DataError("alignment audit: no items");
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < items.size(); ++i)
    if (items[i].id == items[i - 1].id) throw DataError("duplicate item id '" + items[i].id + "'");

  AuditReport report;
  report.analysis = std::string(to_string(cfg.mode));
  report.config = cfg.resolved();
  report.digits = cfg.digits;
  report.attrition.input = items.size();
  report.attrition.retained = items.size();
  const auto groups = detail::scores_by_group(items);

  switch (cfg.mode) {
    case AlignmentMode::ks_two_group: {
      if (groups.size() != 2)
        throw DataError("ks mode needs exactly two groups, found " + std::to_string(groups.size()));
      const auto& [name_a, a] = *groups.begin();
      const auto& [name_b, b] = *std::next(groups.begin());
      report.title = "Score distributions: " + name_a + " vs " + name_b;
      report.ks = ks_two_sample(a, b);
      report.verdict = report.ks->p_value >= cfg.alpha ? "no distributional difference"
                                                       : "distributions differ";
      for (const auto& [g, v] : groups) {
        report.histograms.push_back(make_histogram(g, v));
        report.summaries.push_back(summarize(g, v));
      }
      break;
    }
    case AlignmentMode::score_prompt_regression: {
      report.title = "Regression of quality score on assigned score band and prompt";
      report.observation_unit = "essays";
      std::vector<std::string> prompts;
      for (const auto& [g, v] : groups) prompts.push_back(g);
      const std::string baseline = cfg.baseline_prompt.empty() ? prompts.front() : cfg.baseline_prompt;
      if (!groups.contains(baseline))
        throw DataError("baseline prompt '" + baseline + "' has zero observations");

      DesignMatrix X;
      std::vector<std::string> labels{std::string(kInterceptName)};
      std::vector<double> y;
      std::vector<std::string> bands;
      for (const auto& it : items) {
        X.row_labels.push_back(it.id);
        y.push_back(it.p_high_quality);
        bands.push_back(detail::band_of(it, cfg));
      }
      for (const auto* level : {"low", "high"}) {
        std::vector<double> col;
        for (const auto& b : bands) col.push_back(b == level ? 1.0 : 0.0);
        if (std::find(col.begin(), col.end(), 1.0) == col.end())
          throw DataError(std::string("score band '") + level + "' has zero observations");
        X.add_column(std::string("band_") + level, std::move(col));
        labels.push_back(std::string(level) == "low" ? "Low score" : "High score");
      }
      if (std::find(bands.begin(), bands.end(), "medium") == bands.end())
        throw DataError("baseline score band 'medium' has zero observations");
      for (const auto& prompt : prompts) {
        if (prompt == baseline) continue;
        std::vector<double> col;
        for (const auto& it : items) col.push_back(it.group == prompt ? 1.0 : 0.0);
        X.add_column("prompt_" + prompt, std::move(col));
        labels.push_back("Prompt " + prompt);
      }
      detail::require_varying_response(y);
      report.regression = ols_fit(X, y);
      report.coefficient_labels = std::move(labels);
      report.config.emplace_back("resolved_baseline_prompt", baseline);

      std::vector<double> ratings, rated_scores;
      for (const auto& it : items)
        if (it.rating) {
          ratings.push_back(*it.rating);
          rated_scores.push_back(it.p_high_quality);
        }
      if (ratings.size() >= 3) {
        try {
          report.correlations.push_back({"rating", pearson(ratings, rated_scores)});
        } catch (const NumericError&) {
        }
      }
      for (const auto& [g, v] : groups) report.histograms.push_back(make_histogram(g, v));
      break;
    }
    case AlignmentMode::genre_distributions: {
      report.title = "Quality score distributions by genre";
      for (const auto& [g, v] : groups) {
        report.histograms.push_back(make_histogram(g, v));
        report.summaries.push_back(summarize(g, v));
      }
      break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

struct ReportFormats {
  bool csv = true;
  bool md = true;
};

inline ReportFormats parse_report_formats(std::string_view list) {
  ReportFormats f{false, false};
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto end = list.find(',', pos);
    if (end == std::string_view::npos) end = list.size();
    const auto item = list.substr(pos, end - pos);
    if (item == "csv")
      f.csv = true;
    else if (item == "md")
      f.md = true;
    else if (!item.empty())
      throw ConfigError("unknown report format '" + std::string(item) + "' (csv, md)");
    pos = end + 1;
  }
  if (!f.csv && !f.md) throw ConfigError("no report formats selected");
  return f;
}

inline std::string render_markdown(const AuditReport& r) {
  std::ostringstream out;
  out << "# " << r.title << "\n\n";
  out << "Analysis: `" << r.analysis << "`\n\n";
  if (r.regression) {
    const auto& reg = *r.regression;
    out << "| Feature | Coefficient |\n|---|---|\n";
    for (std::size_t i = 0; i < reg.coefficients.size(); ++i) {
      const auto& c = reg.coefficients[i];
      const auto& label = i < r.coefficient_labels.size() ? r.coefficient_labels[i] : c.name;
      out << "| " << label << " | " << format_coefficient(c.estimate, c.p_value, r.digits)
          << " |\n";
    }
    // p = 1 renders the value with the same minus sign and no stars.
    out << "| R² | " << format_coefficient(reg.r2, 1.0, r.digits) << " |\n";
    out << "| Adj. R² | " << format_coefficient(reg.adj_r2, 1.0, r.digits) << " |\n";
    out << "| N | " << reg.n_obs << " |\n\n";
    out << "Significance: `***` p < 0.001, `**` p < 0.01, `*` p < 0.05.\n\n";
  }
  if (r.ks) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "KS two-sample test: D = %.*f, p = %.*g (n1 = %zu, n2 = %zu)\n\n", r.digits,
                  r.ks->d_stat, r.digits, r.ks->p_value, r.ks->n1, r.ks->n2);
    out << buf;
  }
  if (!r.verdict.empty()) out << "Verdict: " << r.verdict << "\n\n";
  if (!r.correlations.empty()) {
    out << "| Feature | Pearson r | p |\n|---|---|---|\n";
    for (const auto& c : r.correlations) {
      char buf[96];
      std::snprintf(buf, sizeof buf, " | %.*f | %.*g |\n", r.digits, c.result.r, r.digits,
                    c.result.p_value);
      out << "| " << c.feature << buf;
    }
    out << "\n";
  }
  if (!r.summaries.empty()) {
    out << "| Group | N | Mean | Min | Q25 | Median | Q75 | Max |\n"
           "|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : r.summaries) {
      char buf[256];
      std::snprintf(buf, sizeof buf, " | %zu | %.*f | %.*f | %.*f | %.*f | %.*f | %.*f |\n", s.n,
                    r.digits, s.mean, r.digits, s.min, r.digits, s.q25, r.digits, s.median,
                    r.digits, s.q75, r.digits, s.max);
      out << "| " << s.group << buf;
    }
    out << "\n";
  }
  out << "Observations (" << r.observation_unit << "): " << r.attrition.input << " input, "
      << r.attrition.retained << " retained\n";
  for (const auto& [reason, n] : r.attrition.excluded)
    out << "- excluded (" << reason << "): " << n << "\n";
  out << "\n";
  if (!r.imputations.empty()) {
    out << "Imputed values:\n";
    for (const auto& i : r.imputations)
      out << "- " << i.feature << " from " << i.source << " median: " << i.count << "\n";
    out << "\n";
  }
  if (!r.config.empty()) {
    out << "Configuration:\n";
    for (const auto& [k, v] : r.config) out << "- " << k << " = " << v << "\n";
  }
  return out.str();
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << contents;
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace detail

/// Writes report.md and/or the CSV tables into `dir`. Returns the paths
/// written. Output is a pure function of the report.
inline std::vector<std::filesystem::path> emit_report(const AuditReport& r,
                                                      const std::filesystem::path& dir,
                                                      ReportFormats formats = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& body) {
    detail::write_file(dir / name, body);
    written.push_back(dir / name);
  };
  using detail::fmt;

  if (formats.md) emit("report.md", render_markdown(r));
  if (!formats.csv) return written;

  if (r.regression) {
    std::ostringstream o;
    csv::write_row(o, {"feature", "label", "estimate", "std_error", "t_stat", "p_value", "stars"});
    const auto& reg = *r.regression;
    for (std::size_t i = 0; i < reg.coefficients.size(); ++i) {
      const auto& c = reg.coefficients[i];
      csv::write_row(o, {c.name, i < r.coefficient_labels.size() ? r.coefficient_labels[i] : c.name,
                         fmt(c.estimate), fmt(c.std_error), fmt(c.t_stat), fmt(c.p_value),
                         std::string(c.stars())});
    }
    csv::write_row(o, {"r2", "", fmt(reg.r2), "", "", "", ""});
    csv::write_row(o, {"adj_r2", "", fmt(reg.adj_r2), "", "", "", ""});
    csv::write_row(o, {"n_obs", "", std::to_string(reg.n_obs), "", "", "", ""});
    emit("coefficients.csv", o.str());
  }
  if (r.ks) {
    std::ostringstream o;
    csv::write_row(o, {"d_stat", "p_value", "n1", "n2", "verdict"});
    csv::write_row(o, {fmt(r.ks->d_stat), fmt(r.ks->p_value), std::to_string(r.ks->n1),
                       std::to_string(r.ks->n2), r.verdict});
    emit("ks.csv", o.str());
  }
  if (!r.correlations.empty()) {
    std::ostringstream o;
    csv::write_row(o, {"feature", "r", "p_value", "n"});
    for (const auto& c : r.correlations)
      csv::write_row(o, {c.feature, fmt(c.result.r), fmt(c.result.p_value),
                         std::to_string(c.result.n)});
    emit("correlations.csv", o.str());
  }
  if (!r.histograms.empty()) {
    std::ostringstream o;
    csv::write_row(o, {"group", "bin_lo", "bin_hi", "count"});
    for (const auto& h : r.histograms) {
      const double width = 1.0 / static_cast<double>(h.counts.size());
      for (std::size_t b = 0; b < h.counts.size(); ++b)
        csv::write_row(o, {h.group, fmt(static_cast<double>(b) * width),
                           fmt(static_cast<double>(b + 1) * width), std::to_string(h.counts[b])});
    }
    emit("histograms.csv", o.str());
  }
  if (!r.summaries.empty()) {
    std::ostringstream o;
    csv::write_row(o, {"group", "n", "mean", "min", "q25", "median", "q75", "max"});
    for (const auto& s : r.summaries)
      csv::write_row(o, {s.group, std::to_string(s.n), fmt(s.mean), fmt(s.min), fmt(s.q25),
                         fmt(s.median), fmt(s.q75), fmt(s.max)});
    emit("quantiles.csv", o.str());
  }
  {
    std::ostringstream o;
    csv::write_row(o, {"reason", "count"});
    csv::write_row(o, {"input", std::to_string(r.attrition.input)});
    for (const auto& [reason, n] : r.attrition.excluded) csv::write_row(o, {reason, std::to_string(n)});
    csv::write_row(o, {"retained", std::to_string(r.attrition.retained)});
    emit("attrition.csv", o.str());
  }
  if (!r.dropped.empty()) {
    std::ostringstream o;
    csv::write_row(o, {"group_id", "reason"});
    for (const auto& d : r.dropped) csv::write_row(o, {d.group_id, d.reason});
    emit("dropped.csv", o.str());
  }
  if (!r.imputations.empty()) {
    std::ostringstream o;
    csv::write_row(o, {"feature", "source", "count"});
    for (const auto& i : r.imputations) csv::write_row(o, {i.feature, i.source, std::to_string(i.count)});
    emit("imputation.csv", o.str());
  }
  return written;
}

}  // namespace qualgate

#endif  // QUALGATE_AUDIT_HPP_
