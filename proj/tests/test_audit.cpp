#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "qualgate/audit.hpp"
#include "test_support.hpp"

using namespace qualgate;
using qualgate::testing::read_file;
using qualgate::testing::TempDir;

namespace {

std::vector<std::string> words_of(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct DocFixture {
  std::vector<Document> docs;
  std::vector<QualityScore> scores;
  std::vector<DocTopics> topics;
};

/// Documents whose score is an exact linear function of the audit features.
DocFixture exact_doc_fixture(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng({seed, 0xa0d});
  DocFixture f;
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    d.id = "doc" + std::to_string(1000 + (i * 7919) % n);
    const auto tokens = 2 + uniform_below(rng, 200);
    const bool fs = uniform01(rng) < 0.4, th = uniform01(rng) < 0.5;
    std::string text = fs ? "I" : "x";
    text += th ? " she" : " y";
    for (std::size_t t = 2; t < tokens; ++t) text += " w";
    d.text = text;
    const double a = uniform01(rng), b = uniform01(rng) * (1.0 - a);
    DocTopics dt;
    dt.doc_id = d.id;
    dt.proportions = {1.0 - a - b, a, b};
    const double y = 0.1 + 0.05 * std::log2(static_cast<double>(tokens)) + 0.2 * a - 0.1 * b +
                     0.03 * (fs ? 1.0 : 0.0) - 0.02 * (th ? 1.0 : 0.0);
    f.scores.push_back({d.id, y});
    f.topics.push_back(dt);
    f.docs.push_back(std::move(d));
  }
  return f;
}

SchoolRecord school(const std::string& id, Rng& rng) {
  SchoolRecord r;
  r.school_id = id;
  r.n_students = 100.0 + static_cast<double>(uniform_below(rng, 3000));
  r.student_teacher_ratio = 8.0 + uniform01(rng) * 20.0;
  r.is_public = uniform01(rng) < 0.7;
  r.is_magnet = uniform01(rng) < 0.2;
  r.is_charter = uniform01(rng) < 0.2;
  r.pct_rural = uniform01(rng);
  r.pct_bachelor = uniform01(rng);
  r.median_home_value = 50000.0 + uniform01(rng) * 800000.0;
  r.pct_gop_2016 = uniform01(rng);
  r.zip = std::to_string(10000 + uniform_below(rng, 50));
  r.county_fips = std::to_string(1000 + uniform_below(rng, 10));
  r.state = uniform01(rng) < 0.5 ? "NY" : "OH";
  return r;
}

}  // namespace

TEST(Pronouns, Examples) {
  EXPECT_EQ(pronoun_flags("I went home."), (PronounFlags{true, false}));
  EXPECT_EQ(pronoun_flags("She said so."), (PronounFlags{false, true}));
  EXPECT_EQ(pronoun_flags("Iowa item"), (PronounFlags{false, false}));
  EXPECT_EQ(pronoun_flags("\"You,\" they replied"), (PronounFlags{true, true}));
  EXPECT_EQ(pronoun_flags(""), (PronounFlags{false, false}));
}

TEST(Pronouns, ListsMatchDataFiles) {
  const auto fs = words_of(QUALGATE_SOURCE_DIR "/data/pronouns/first_second-v1.txt");
  const auto th = words_of(QUALGATE_SOURCE_DIR "/data/pronouns/third-v1.txt");
  EXPECT_EQ(std::set<std::string>(fs.begin(), fs.end()),
            std::set<std::string>(first_second_person_pronouns().begin(),
                                  first_second_person_pronouns().end()));
  EXPECT_EQ(std::set<std::string>(th.begin(), th.end()),
            std::set<std::string>(third_person_pronouns().begin(), third_person_pronouns().end()));
}

TEST(DocAudit, RecoversExactLinearScore) {
  const auto f = exact_doc_fixture(120, 1);
  DocAuditOptions opt;
  const auto r = doc_level_audit_from_topics(f.docs, f.scores, f.topics, opt);
  const auto& reg = *r.regression;
  EXPECT_NEAR(reg.at("Intercept").estimate, 0.1, 1e-8);
  EXPECT_NEAR(reg.at("log2_tokens").estimate, 0.05, 1e-8);
  EXPECT_NEAR(reg.at("topic_1").estimate, 0.2, 1e-8);
  EXPECT_NEAR(reg.at("topic_2").estimate, -0.1, 1e-8);
  EXPECT_NEAR(reg.at("first_second_pronoun").estimate, 0.03, 1e-8);
  EXPECT_NEAR(reg.at("third_pronoun").estimate, -0.02, 1e-8);
  EXPECT_NEAR(reg.r2, 1.0, 1e-10);
  EXPECT_EQ(reg.n_obs, 120u);
  EXPECT_EQ(r.coefficient_labels.back(), "log2(Number of tokens)");
  EXPECT_EQ(r.histograms.at(0).total(), 120u);
}

TEST(DocAudit, InputOrderDoesNotMatter) {
  auto f = exact_doc_fixture(60, 2);
  const auto a = doc_level_audit_from_topics(f.docs, f.scores, f.topics, {});
  std::reverse(f.docs.begin(), f.docs.end());
  std::reverse(f.topics.begin(), f.topics.end());
  const auto b = doc_level_audit_from_topics(f.docs, f.scores, f.topics, {});
  EXPECT_EQ(render_markdown(a), render_markdown(b));
}

TEST(DocAudit, Errors) {
  auto f = exact_doc_fixture(40, 3);
  auto flat = f.scores;
  for (auto& s : flat) s.p_high_quality = 0.5;
  EXPECT_THROW(doc_level_audit_from_topics(f.docs, flat, f.topics, {}), NumericError);
  DocAuditOptions bad;
  bad.omitted_topic = 3;
  EXPECT_THROW(doc_level_audit_from_topics(f.docs, f.scores, f.topics, bad), ConfigError);
  auto no_pronoun = f;
  for (auto& d : no_pronoun.docs) {
    const auto second = d.text.find(' ', d.text.find(' ') + 1);
    d.text = "x y" + (second == std::string::npos ? std::string() : d.text.substr(second));
  }
  EXPECT_THROW(doc_level_audit_from_topics(no_pronoun.docs, no_pronoun.scores, no_pronoun.topics, {}),
               NumericError);
  auto missing = f.scores;
  missing.pop_back();
  EXPECT_THROW(doc_level_audit_from_topics(f.docs, missing, f.topics, {}), DataError);
}

TEST(GroupScores, MeanAndMedianPerGroup) {
  std::vector<Document> docs(5);
  std::vector<QualityScore> scores;
  const double p[] = {0.1, 0.2, 0.9, 0.5, 0.7};
  for (std::size_t i = 0; i < 5; ++i) {
    docs[i].id = "d" + std::to_string(i);
    if (i < 3) docs[i].group_id = "s1";
    else if (i == 3) docs[i].group_id = "s0";
    scores.push_back({docs[i].id, p[i]});
  }
  const auto mean = group_scores(docs, scores);
  ASSERT_EQ(mean.size(), 2u);
  EXPECT_EQ(mean[0].group_id, "s0");
  EXPECT_EQ(mean[0].n_docs, 1u);
  EXPECT_NEAR(mean[1].mean_p_high_quality, 0.4, 1e-15);
  EXPECT_EQ(group_scores(docs, scores, Aggregation::median)[1].mean_p_high_quality, 0.2);
}

TEST(DemographicAudit, RecoversExactRuralEffect) {
  Rng rng = make_rng({4});
  std::vector<SchoolRecord> records;
  std::vector<GroupScoreRow> groups;
  for (int i = 0; i < 80; ++i) {
    const auto r = school("s" + std::to_string(i), rng);
    groups.push_back({r.school_id, 0.3 - 0.07 * *r.pct_rural, 150});
    records.push_back(r);
  }
  // Excluded for distinct reasons.
  groups.push_back({"ghost", 0.5, 500});
  records.push_back(school("few", rng));
  groups.push_back({"few", 0.5, 10});
  auto rich = school("rich", rng);
  rich.median_home_value = 2e6;
  records.push_back(rich);
  groups.push_back({"rich", 0.5, 500});
  auto nosize = school("nosize", rng);
  nosize.n_students.reset();
  records.push_back(nosize);
  groups.push_back({"nosize", 0.5, 500});

  const auto r = demographic_audit(groups, records, DemographicConfig{});
  const auto& reg = *r.regression;
  EXPECT_NEAR(reg.at("Intercept").estimate, 0.3, 1e-8);
  EXPECT_NEAR(reg.at("pct_rural").estimate, -0.07, 1e-8);
  for (const auto* other : {"pct_bachelor", "median_home_value", "n_students", "is_public"})
    EXPECT_NEAR(reg.at(other).estimate, 0.0, 1e-8) << other;
  EXPECT_NEAR(reg.r2, 1.0, 1e-10);
  EXPECT_EQ(reg.n_obs, 80u);

  const auto& a = r.attrition;
  EXPECT_EQ(a.input, 84u);
  EXPECT_EQ(a.retained, 80u);
  std::size_t excluded = 0;
  for (const auto& [reason, n] : a.excluded) {
    EXPECT_EQ(n, 1u) << reason;
    excluded += n;
  }
  EXPECT_EQ(a.input, a.retained + excluded);
  EXPECT_EQ(r.dropped.size(), 4u);
  EXPECT_EQ(r.coefficient_labels[1], "% Rural");
  EXPECT_FALSE(r.correlations.empty());
}

TEST(DemographicAudit, ImputesAndReportsCounts) {
  Rng rng = make_rng({5});
  std::vector<SchoolRecord> records;
  std::vector<GroupScoreRow> groups;
  for (int i = 0; i < 40; ++i) {
    auto r = school("s" + std::to_string(i), rng);
    if (i % 10 == 0) r.pct_bachelor.reset();
    groups.push_back({r.school_id, uniform01(rng), 200});
    records.push_back(r);
  }
  const auto r = demographic_audit(groups, records, DemographicConfig{});
  std::size_t imputed = 0;
  for (const auto& i : r.imputations) {
    EXPECT_EQ(i.feature, "pct_bachelor");
    imputed += i.count;
  }
  EXPECT_EQ(imputed, 4u);
}

TEST(DemographicAudit, GopShareAbsorbsCorrelatedRuralEffect) {
  Rng rng = make_rng({6});
  std::vector<SchoolRecord> records;
  std::vector<GroupScoreRow> groups;
  for (int i = 0; i < 300; ++i) {
    auto r = school("s" + std::to_string(i), rng);
    r.pct_gop_2016 = std::clamp(*r.pct_rural + 0.1 * (uniform01(rng) - 0.5), 0.0, 1.0);
    const double noise = 0.01 * (uniform01(rng) - 0.5);
    groups.push_back({r.school_id, 0.6 - 0.2 * *r.pct_gop_2016 + noise, 150});
    records.push_back(r);
  }
  DemographicConfig base;
  const auto without = demographic_audit(groups, records, base);
  EXPECT_LT(without.regression->at("pct_rural").p_value, 0.001);
  DemographicConfig gop;
  gop.feature_set = "gop";
  gop.features = demographic_feature_set("gop");
  const auto with = demographic_audit(groups, records, gop);
  EXPECT_GT(with.regression->at("pct_rural").p_value, 0.05);
  EXPECT_LT(with.regression->at("pct_gop_2016").p_value, 0.001);
}

TEST(DemographicAudit, TooFewSchools) {
  Rng rng = make_rng({7});
  std::vector<SchoolRecord> records;
  std::vector<GroupScoreRow> groups;
  for (int i = 0; i < 9; ++i) {
    records.push_back(school("s" + std::to_string(i), rng));
    groups.push_back({records.back().school_id, uniform01(rng), 150});
  }
  EXPECT_THROW(demographic_audit(groups, records, DemographicConfig{}), NumericError);
  EXPECT_THROW(demographic_feature_set("nope"), ConfigError);
}

TEST(AlignmentAudit, IdenticalGroupsShowNoDifference) {
  std::vector<AlignmentItem> items;
  for (int i = 0; i < 50; ++i) {
    const double p = (i * 37 % 100) / 100.0;
    items.push_back({"a" + std::to_string(i), "fact", {}, {}, p});
    items.push_back({"b" + std::to_string(i), "fiction", {}, {}, p});
  }
  const auto r = alignment_audit(items, {});
  EXPECT_EQ(r.ks->d_stat, 0.0);
  EXPECT_EQ(r.ks->p_value, 1.0);
  EXPECT_EQ(r.verdict, "no distributional difference");
  EXPECT_EQ(r.histograms.size(), 2u);
  for (const auto& h : r.histograms) EXPECT_EQ(h.total(), 50u);
}

TEST(AlignmentAudit, SeparatedGroupsDiffer) {
  std::vector<AlignmentItem> items;
  for (int i = 0; i < 40; ++i) {
    items.push_back({"a" + std::to_string(i), "x", {}, {}, 0.1 + i * 0.001});
    items.push_back({"b" + std::to_string(i), "y", {}, {}, 0.8 + i * 0.001});
  }
  const auto r = alignment_audit(items, {});
  EXPECT_EQ(r.ks->d_stat, 1.0);
  EXPECT_EQ(r.verdict, "distributions differ");
  items.push_back({"c", "z", {}, {}, 0.5});
  EXPECT_THROW(alignment_audit(items, {}), DataError);
}

TEST(AlignmentAudit, PromptDummyEffect) {
  std::vector<AlignmentItem> items;
  const char* bands[] = {"low", "medium", "high"};
  const double band_effect[] = {-0.1, 0.0, 0.15};
  int n = 0;
  for (const char* prompt : {"A", "B", "G"})
    for (int b = 0; b < 3; ++b)
      for (int rep = 0; rep < 4; ++rep) {
        const double y = 0.2 + band_effect[b] + (std::string(prompt) == "G" ? 0.6 : 0.0) +
                         (std::string(prompt) == "B" ? 0.01 * rep : 0.0);
        items.push_back({"e" + std::to_string(n++), prompt, std::string(bands[b]), {}, y});
      }
  AlignmentConfig cfg;
  cfg.mode = AlignmentMode::score_prompt_regression;
  const auto r = alignment_audit(items, cfg);
  EXPECT_NEAR(r.regression->at("prompt_G").estimate, 0.6, 1e-8);
  EXPECT_NEAR(r.regression->at("band_low").estimate, -0.1, 1e-8);
  EXPECT_NEAR(r.regression->at("band_high").estimate, 0.15, 1e-8);
  EXPECT_EQ(r.coefficient_labels[1], "Low score");
  EXPECT_EQ(r.coefficient_labels.back(), "Prompt G");

  auto no_high = items;
  std::erase_if(no_high, [](const auto& it) { return it.band == "high"; });
  EXPECT_THROW(alignment_audit(no_high, cfg), DataError);
  auto no_medium = items;
  std::erase_if(no_medium, [](const auto& it) { return it.band == "medium"; });
  EXPECT_THROW(alignment_audit(no_medium, cfg), DataError);
  cfg.baseline_prompt = "Q";
  EXPECT_THROW(alignment_audit(items, cfg), DataError);
}

TEST(AlignmentAudit, BandDummiesReproduceLevelMeans) {
  std::vector<AlignmentItem> items;
  Rng rng = make_rng({8});
  std::map<std::string, std::vector<double>> by_band;
  for (int i = 0; i < 90; ++i) {
    AlignmentItem it;
    it.id = "e" + std::to_string(i);
    it.group = "only";
    it.rating = 1.0 + uniform01(rng) * 5.0;
    it.p_high_quality = uniform01(rng);
    const std::string band = *it.rating < 2.5 ? "low" : (*it.rating >= 4.0 ? "high" : "medium");
    by_band[band].push_back(it.p_high_quality);
    items.push_back(it);
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  AlignmentConfig cfg;
  cfg.mode = AlignmentMode::score_prompt_regression;
  const auto r = alignment_audit(items, cfg);
  const double base = r.regression->at("Intercept").estimate;
  EXPECT_NEAR(base, mean(by_band["medium"]), 1e-12);
  EXPECT_NEAR(base + r.regression->at("band_low").estimate, mean(by_band["low"]), 1e-12);
  EXPECT_NEAR(base + r.regression->at("band_high").estimate, mean(by_band["high"]), 1e-12);
  ASSERT_EQ(r.correlations.size(), 1u);
}

TEST(AlignmentAudit, GenreSummaries) {
  std::vector<AlignmentItem> items;
  for (int i = 0; i < 30; ++i)
    items.push_back({"g" + std::to_string(i), i % 3 == 0 ? "poetry" : "news", {}, {}, i / 30.0});
  AlignmentConfig cfg;
  cfg.mode = parse_alignment_mode("genre");
  const auto r = alignment_audit(items, cfg);
  ASSERT_EQ(r.summaries.size(), 2u);
  EXPECT_EQ(r.summaries[0].group, "news");
  EXPECT_EQ(r.summaries[0].n + r.summaries[1].n, 30u);
  EXPECT_LE(r.summaries[1].min, r.summaries[1].mean);
  EXPECT_THROW(parse_alignment_mode("bogus"), ConfigError);
}

TEST(Report, StarsAndUnicodeMinus) {
  EXPECT_EQ(format_coefficient(-0.069, 0.0001), "−0.069***");
  EXPECT_EQ(format_coefficient(0.0123, 0.03), "0.012*");
  EXPECT_EQ(format_coefficient(-0.0001, 0.5), "0.000");

  AuditReport r;
  r.title = "t";
  RegressionResult reg;
  reg.coefficients.push_back({"pct_rural", -0.069, 0.01, -6.9, 1e-6});
  reg.n_obs = 10;
  r.regression = reg;
  r.coefficient_labels = {"% Rural"};
  EXPECT_NE(render_markdown(r).find("| % Rural | −0.069*** |"), std::string::npos);
}

TEST(Report, EmitIsDeterministicAndComplete) {
  const auto f = exact_doc_fixture(80, 9);
  const auto a = doc_level_audit_from_topics(f.docs, f.scores, f.topics, {});
  TempDir d1, d2;
  const auto files = emit_report(a, d1.path());
  emit_report(doc_level_audit_from_topics(f.docs, f.scores, f.topics, {}), d2.path());
  EXPECT_GE(files.size(), 4u);
  for (const auto& p : files) EXPECT_EQ(read_file(p), read_file(d2.path() / p.filename())) << p;
  const auto coefs = read_file(d1.path() / "coefficients.csv");
  EXPECT_EQ(coefs.rfind("feature,label,estimate,std_error,t_stat,p_value,stars\n", 0), 0u);
  EXPECT_NE(coefs.find("\nn_obs,,80,"), std::string::npos);

  const auto hist = read_file(d1.path() / "histograms.csv");
  std::size_t total = 0, lines = 0;
  std::istringstream in(hist);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    total += std::stoul(line.substr(line.rfind(',') + 1));
    ++lines;
  }
  EXPECT_EQ(lines, kHistogramBins);
  EXPECT_EQ(total, 80u);

  TempDir d3;
  const auto md_only = emit_report(a, d3.path(), parse_report_formats("md"));
  ASSERT_EQ(md_only.size(), 1u);
  EXPECT_EQ(md_only[0].filename(), "report.md");
  EXPECT_THROW(parse_report_formats("pdf"), ConfigError);
}
