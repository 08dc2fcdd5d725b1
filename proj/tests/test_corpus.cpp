#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qualgate/config.hpp"
#include "qualgate/corpus.hpp"
#include "test_support.hpp"

using namespace qualgate;
using qualgate::testing::TempDir;
using qualgate::testing::write_file;

namespace {

std::vector<Document> docs_of_tokens(std::size_t n, std::size_t tokens_each, const std::string& prefix) {
  std::vector<Document> out;
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    d.id = prefix + std::to_string(i);
    for (std::size_t t = 0; t < tokens_each; ++t) d.text += (t ? " w" : "w") + std::to_string(t);
    out.push_back(std::move(d));
  }
  return out;
}

std::size_t total_tokens(const std::vector<Document>& docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.token_count();
  return n;
}

SchoolRecord school(const std::string& id, const std::string& zip, const std::string& county,
                    const std::string& state) {
  SchoolRecord r;
  r.school_id = id;
  r.n_students = 500;
  r.student_teacher_ratio = 15;
  r.is_public = true;
  r.is_magnet = false;
  r.is_charter = false;
  r.pct_rural = 0.2;
  r.pct_bachelor = 0.4;
  r.median_home_value = 300000;
  r.zip = zip;
  r.county_fips = county;
  r.state = state;
  return r;
}

}  // namespace

TEST(LoadDocuments, MinimalJsonl) {
  TempDir dir;
  write_file(dir.file("a.jsonl"), "{\"id\":\"a\",\"text\":\"hi\"}\n");
  const auto docs = load_documents(dir.file("a.jsonl"));
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[0].text, "hi");
  EXPECT_FALSE(docs[0].label);
}

TEST(LoadDocuments, EmptyFile) {
  TempDir dir;
  write_file(dir.file("e.jsonl"), "");
  EXPECT_TRUE(load_documents(dir.file("e.jsonl")).empty());
}

TEST(LoadDocuments, MissingIdNamesLine) {
  TempDir dir;
  write_file(dir.file("bad.jsonl"),
             "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"y\"}\n{\"text\":\"z\"}\n");
  try {
    load_documents(dir.file("bad.jsonl"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadDocuments, DuplicateIdAndMalformedJson) {
  TempDir dir;
  write_file(dir.file("dup.jsonl"), "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
  EXPECT_THROW(load_documents(dir.file("dup.jsonl")), DataError);
  write_file(dir.file("junk.jsonl"), "{\"id\":\"a\",\"text\":\"x\"}\n{not json\n");
  try {
    load_documents(dir.file("junk.jsonl"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(load_documents(dir.file("missing.jsonl")), IoError);
}

TEST(LoadDocuments, KeepsFieldsAndUnknownExtras) {
  TempDir dir;
  write_file(dir.file("f.jsonl"),
             "{\"id\":\"a\",\"text\":\"\",\"label\":\"positive\",\"category\":\"sports\","
             "\"group_id\":\"s1\",\"zip\":\"02139\",\"custom\":{\"k\":1}}\n");
  const auto docs = load_documents(dir.file("f.jsonl"));
  ASSERT_EQ(docs.size(), 1u);
  const auto& d = docs[0];
  EXPECT_EQ(d.text, "");
  EXPECT_EQ(d.label, Label::positive);
  EXPECT_EQ(d.category, "sports");
  EXPECT_EQ(d.group_id, "s1");
  EXPECT_EQ(d.zip, "02139");
  EXPECT_EQ(d.extra.at("custom").at("k"), 1);

  write_documents_jsonl(dir.file("g.jsonl"), docs);
  const auto again = load_documents(dir.file("g.jsonl"));
  EXPECT_EQ(document_to_json(again[0]), document_to_json(d));
}

TEST(LoadDocuments, Csv) {
  TempDir dir;
  write_file(dir.file("d.csv"), "id,text,label\na,\"hello, world\",negative\nb,\"two\nlines\",\n");
  const auto docs = load_documents(dir.file("d.csv"));
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].text, "hello, world");
  EXPECT_EQ(docs[0].label, Label::negative);
  EXPECT_EQ(docs[1].text, "two\nlines");
  EXPECT_FALSE(docs[1].label);
}

TEST(SampleByTokenBudget, StopsAtFirstDocumentReachingBudget) {
  const auto docs = docs_of_tokens(10, 10, "d");
  Rng rng = make_rng({1});
  const auto s = sample_by_token_budget(docs, 25, rng);
  EXPECT_EQ(s.docs.size(), 3u);
  EXPECT_EQ(s.tokens, 30u);
  EXPECT_FALSE(s.exhausted);
}

TEST(SampleByTokenBudget, ExhaustedReturnsEverything) {
  const auto docs = docs_of_tokens(4, 10, "d");
  const auto s = sample_by_token_budget(docs, 1000, std::uint64_t{3});
  EXPECT_EQ(s.docs.size(), 4u);
  EXPECT_TRUE(s.exhausted);
}

TEST(SampleByTokenBudget, DeterministicPerSeed) {
  const auto docs = docs_of_tokens(100, 7, "d");
  auto ids = [&](std::uint64_t seed) {
    Rng rng = make_rng({seed});
    std::vector<std::string> out;
    for (const auto& d : sample_by_token_budget(docs, 200, rng).docs) out.push_back(d.id);
    return out;
  };
  EXPECT_EQ(ids(5), ids(5));
  EXPECT_NE(ids(5), ids(6));
  Rng zero = make_rng({0});
  EXPECT_THROW(sample_by_token_budget(docs, 0, zero), ConfigError);
}

TEST(SampleByTokenBudget, TokenSumReachesBudget) {
  Rng gen = make_rng({77});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Document> docs;
    for (int i = 0; i < 50; ++i) {
      Document d;
      d.id = std::to_string(i);
      const auto n = uniform_below(gen, 20);
      for (std::size_t t = 0; t < n; ++t) d.text += "x ";
      docs.push_back(d);
    }
    const auto budget = 1 + uniform_below(gen, 600);
    Rng rng = make_rng({static_cast<std::uint64_t>(trial)});
    const auto s = sample_by_token_budget(docs, budget, rng);
    EXPECT_EQ(s.tokens, total_tokens(s.docs));
    if (!s.exhausted) {
      EXPECT_GE(s.tokens, budget);
      // Removing the last document drops below the budget.
      EXPECT_LT(s.tokens - s.docs.back().token_count(), budget);
    }
  }
}

TEST(BuildTrainingSet, TwoSourcesHalfSplit) {
  DatasetSpec spec;
  spec.seed = 9;
  spec.test_fraction = 0.5;
  spec.sources = {{"good", "", Label::positive, 100}, {"web", "", Label::negative, 100}};
  std::map<std::string, std::vector<Document>> sources{{"good", docs_of_tokens(10, 10, "g")},
                                                       {"web", docs_of_tokens(10, 10, "w")}};
  const auto split = build_training_set(spec, sources);
  EXPECT_EQ(total_tokens(split.train), 100u);
  EXPECT_EQ(total_tokens(split.test), 100u);
  auto count = [](const std::vector<Document>& docs, Label l) {
    return std::count_if(docs.begin(), docs.end(), [&](const auto& d) { return d.label == l; });
  };
  EXPECT_EQ(count(split.train, Label::positive), count(split.train, Label::negative));
  EXPECT_EQ(count(split.test, Label::positive), count(split.test, Label::negative));
}

TEST(BuildTrainingSet, DisjointExhaustiveAndDeterministic) {
  DatasetSpec spec;
  spec.seed = 4;
  spec.sources = {{"a", "", Label::positive, 300},
                  {"b", "", Label::positive, 300},
                  {"c", "", Label::negative, 500}};
  std::map<std::string, std::vector<Document>> sources{{"a", docs_of_tokens(60, 9, "a")},
                                                       {"b", docs_of_tokens(60, 11, "b")},
                                                       {"c", docs_of_tokens(80, 13, "c")}};
  const auto s1 = build_training_set(spec, sources);
  const auto s2 = build_training_set(spec, sources);
  std::set<std::string> train_ids, test_ids;
  for (const auto& d : s1.train) train_ids.insert(d.id);
  for (const auto& d : s1.test) test_ids.insert(d.id);
  for (const auto& id : test_ids) EXPECT_FALSE(train_ids.contains(id));
  EXPECT_EQ(train_ids.size() + test_ids.size(), s1.train.size() + s1.test.size());
  for (const auto& d : s1.train) {
    ASSERT_TRUE(d.label);
    EXPECT_EQ(*d.label, d.id[0] == 'c' ? Label::negative : Label::positive);
  }
  ASSERT_EQ(s1.train.size(), s2.train.size());
  for (std::size_t i = 0; i < s1.train.size(); ++i) EXPECT_EQ(s1.train[i].id, s2.train[i].id);
  for (std::size_t i = 0; i < s1.test.size(); ++i) EXPECT_EQ(s1.test[i].id, s2.test[i].id);
}

TEST(BuildTrainingSet, Errors) {
  DatasetSpec spec;
  spec.sources = {{"a", "", Label::positive, 10}};
  std::map<std::string, std::vector<Document>> none;
  EXPECT_THROW(build_training_set(spec, none), ConfigError);
  std::map<std::string, std::vector<Document>> empty{{"a", {}}};
  EXPECT_THROW(build_training_set(spec, empty), DataError);
  spec.test_fraction = 1.0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(DatasetSpec, FullScaleConfigRoundTrip) {
  const auto cfg = Config::from_file(QUALGATE_SOURCE_DIR "/configs/full_scale_dataset.ini");
  const auto spec = DatasetSpec::from_config(cfg);
  std::size_t positive = 0, negative = 0;
  for (const auto& s : spec.sources) {
    if (s.label == Label::positive) {
      EXPECT_EQ(s.budget, 80'000'000u);
      positive += s.budget;
    } else {
      negative += s.budget;
    }
  }
  EXPECT_EQ(positive, 240'000'000u);
  EXPECT_EQ(negative, 240'000'000u);
  EXPECT_EQ(spec.sources.size(), 4u);
  const auto again = DatasetSpec::from_config(Config::from_string(spec.to_config().to_string()));
  ASSERT_EQ(again.sources.size(), spec.sources.size());
  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    EXPECT_EQ(again.sources[i].name, spec.sources[i].name);
    EXPECT_EQ(again.sources[i].budget, spec.sources[i].budget);
    EXPECT_EQ(again.sources[i].label, spec.sources[i].label);
  }
  EXPECT_EQ(again.seed, spec.seed);
  EXPECT_EQ(again.test_fraction, spec.test_fraction);
}

TEST(JoinSchoolMetadata, OneOfTwoMatched) {
  const std::vector<GroupScoreRow> groups{{"s1", 0.5, 150}, {"zz", 0.4, 150}};
  const auto r = join_school_metadata(groups, {school("s1", "1", "1", "MA")}, SchoolFilters{});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].record.school_id, "s1");
  EXPECT_EQ(r.attrition.excluded_count(kUnmatched), 1u);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].group_id, "zz");
}

TEST(JoinSchoolMetadata, Filters) {
  auto rich = school("rich", "1", "1", "CA");
  rich.median_home_value = 1'200'000;
  auto tiny = school("tiny", "1", "1", "CA");
  tiny.n_students.reset();
  const std::vector<SchoolRecord> records{school("few", "1", "1", "CA"), rich, tiny,
                                          school("ok", "1", "1", "CA")};
  const std::vector<GroupScoreRow> groups{
      {"few", 0.5, 99}, {"rich", 0.5, 100}, {"tiny", 0.5, 200}, {"ok", 0.5, 100}};
  const auto r = join_school_metadata(groups, records, SchoolFilters{});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].record.school_id, "ok");
  EXPECT_EQ(r.attrition.excluded_count(kTooFewArticles), 1u);
  EXPECT_EQ(r.attrition.excluded_count(kHomeValueCap), 1u);
  EXPECT_EQ(r.attrition.excluded_count(kMissingSchoolSize), 1u);
  std::size_t excluded = 0;
  for (const auto& [reason, n] : r.attrition.excluded) excluded += n;
  EXPECT_EQ(r.attrition.input, r.attrition.retained + excluded);

  SchoolFilters loose;
  loose.min_articles = 1;
  loose.max_home_value.reset();
  loose.require_school_size = false;
  EXPECT_EQ(join_school_metadata(groups, records, loose).rows.size(), 4u);
}

TEST(JoinSchoolMetadata, DuplicateRecordIsError) {
  EXPECT_THROW(join_school_metadata({}, {school("a", "", "", ""), school("a", "", "", "")}, {}),
               DataError);
}

TEST(SchoolRecords, CsvRoundTripAndValidation) {
  TempDir dir;
  auto a = school("a", "02139", "25017", "MA");
  a.pct_gop_2016 = 0.3;
  auto b = school("b", "", "", "TX");
  b.pct_rural.reset();
  write_school_records(dir.file("s.csv"), {a, b});
  const auto back = load_school_records(dir.file("s.csv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].pct_gop_2016, 0.3);
  EXPECT_FALSE(back[1].pct_rural);
  EXPECT_EQ(back[0].zip, "02139");
  EXPECT_EQ(back[1].median_home_value, 300000.0);

  auto bad = a;
  bad.pct_rural = 1.5;
  EXPECT_THROW(validate_school_record(bad), DataError);
  bad = a;
  bad.n_students = 0;
  EXPECT_THROW(validate_school_record(bad), DataError);

  write_file(dir.file("short.csv"), "school_id,n_students\na,1\n");
  EXPECT_THROW(load_school_records(dir.file("short.csv")), DataError);
}

TEST(ImputeMissing, ObservedValuesUnchanged) {
  FeatureTable t;
  t.row_ids = {"a", "b"};
  t.zip = {"1", "1"};
  t.county = {"c", "c"};
  t.state = {"s", "s"};
  t.columns = {"x"};
  t.values = {{1.5, 2.5}};
  const auto r = impute_missing(t, "x");
  EXPECT_EQ(r.table.values, t.values);
  EXPECT_EQ(r.provenance[0], ImputeSource::observed);
}

TEST(ImputeMissing, ZipMedianOfTwo) {
  FeatureTable t;
  t.row_ids = {"a", "b", "c", "d"};
  t.zip = {"1", "1", "1", "2"};
  t.county = {"c", "c", "c", "c"};
  t.state = {"s", "s", "s", "s"};
  t.columns = {"x"};
  t.values = {{1.0, 3.0, std::nullopt, 100.0}};
  const auto r = impute_missing(t, "x");
  EXPECT_EQ(*r.table.values[0][2], 2.0);
  EXPECT_EQ(r.provenance[2], ImputeSource::zip);
}

TEST(ImputeMissing, FallsBackToCountyStateGlobal) {
  // Hand-built 6-row fixture.
  FeatureTable t;
  t.row_ids = {"r0", "r1", "r2", "r3", "r4", "r5"};
  t.zip = {"z1", "z2", "z3", "z4", "z5", "z6"};
  t.county = {"c1", "c1", "c2", "c3", "c4", "c9"};
  t.state = {"A", "A", "A", "A", "B", "C"};
  t.columns = {"x"};
  t.values = {{10.0, std::nullopt, 30.0, std::nullopt, 50.0, std::nullopt}};
  const auto r = impute_missing(t, "x");
  const auto& col = r.table.values[0];
  // r1: zip z2 empty, county c1 has {10}.
  EXPECT_EQ(*col[1], 10.0);
  EXPECT_EQ(r.provenance[1], ImputeSource::county);
  // r3: zip and county empty, state A has {10, 30}.
  EXPECT_EQ(*col[3], 20.0);
  EXPECT_EQ(r.provenance[3], ImputeSource::state);
  // r5: state C has nothing, global median of {10, 30, 50}.
  EXPECT_EQ(*col[5], 30.0);
  EXPECT_EQ(r.provenance[5], ImputeSource::global);
  for (const auto& v : col) EXPECT_TRUE(v.has_value());
  EXPECT_EQ(*col[0], 10.0);
  EXPECT_EQ(*col[2], 30.0);
  EXPECT_EQ(*col[4], 50.0);
}

TEST(ImputeMissing, EntirelyMissingIsError) {
  FeatureTable t;
  t.row_ids = {"a"};
  t.zip = {"1"};
  t.county = {"c"};
  t.state = {"s"};
  t.columns = {"x"};
  t.values = {{std::nullopt}};
  EXPECT_THROW(impute_missing(t, "x"), DataError);
  EXPECT_THROW(impute_missing(t, "y"), ConfigError);
}

TEST(Config, IniParsingAndDottedSections) {
  const auto cfg = Config::from_string(
      "seed = 3\n; comment\n[source.wiki]\npath = w.jsonl\nlabel = positive\nbudget = 5\n"
      "[flags]\non = yes\noff = 0\n");
  EXPECT_EQ(cfg.get_int("", "seed", 0), 3);
  EXPECT_EQ(cfg.get_string("source.wiki", "path", ""), "w.jsonl");
  EXPECT_TRUE(cfg.get_bool("flags", "on", false));
  EXPECT_FALSE(cfg.get_bool("flags", "off", true));
  EXPECT_EQ(cfg.get_int("flags", "missing", 42), 42);
  EXPECT_THROW(cfg.get_int("source.wiki", "path", 0), ConfigError);
  EXPECT_EQ(cfg.sections_with_prefix("source."), std::vector<std::string>{"source.wiki"});
}

TEST(SampleDocuments, UniformWithoutReplacementInInputOrder) {
  std::vector<Document> docs(50);
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].id = "d" + std::to_string(100 + i);
  const auto a = sample_documents(docs, 10, 3);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(),
                             [](const auto& x, const auto& y) { return x.id < y.id; }));
  std::set<std::string> ids;
  for (const auto& d : a) ids.insert(d.id);
  EXPECT_EQ(ids.size(), 10u);
  const auto b = sample_documents(docs, 10, 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
  EXPECT_EQ(sample_documents(docs, 80, 3).size(), 50u);

  // Every document is equally likely: inclusion counts over many seeds.
  std::vector<int> hits(docs.size(), 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed)
    for (const auto& d : sample_documents(docs, 10, seed)) ++hits[std::stoul(d.id.substr(1)) - 100];
  // Expected 400 per document; 5 sigma is about 89.
  for (int h : hits) EXPECT_NEAR(h, 400, 90);
}
