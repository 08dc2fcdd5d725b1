#ifndef QUALGATE_CORPUS_HPP_
#define QUALGATE_CORPUS_HPP_

// Document ingestion, token-budget sampling, train/test construction and the
// school metadata join used by the demographic audit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "qualgate/config.hpp"
#include "qualgate/csv.hpp"
#include "qualgate/errors.hpp"
#include "qualgate/featurize.hpp"
#include "qualgate/random.hpp"

namespace qualgate {

enum class Label { negative = 0, positive = 1 };

inline std::string_view to_string(Label l) {
  return l == Label::positive ? "positive" : "negative";
}

inline Label parse_label(std::string_view s) {
  if (s == "positive" || s == "1") return Label::positive;
  if (s == "negative" || s == "0") return Label::negative;
  throw ConfigError("unknown label '" + std::string(s) +
                    "' (expected positive or negative)");
}

struct Document {
  std::string id;
  std::string text;
  std::string source;
  std::optional<Label> label;
  std::optional<std::string> category;
  std::optional<std::string> group_id;
  std::optional<std::string> zip;
  std::optional<std::string> county_fips;
  /// Fields not listed above, kept verbatim for round-tripping.
  nlohmann::json extra = nlohmann::json::object();

  std::size_t token_count() const { return count_tokens(text); }
};

namespace detail {

inline const std::set<std::string, std::less<>>& known_document_fields() {
  static const std::set<std::string, std::less<>> fields{
      "id", "text", "source", "label", "category", "group_id", "zip",
      "county_fips"};
  return fields;
}

inline std::optional<std::string> optional_string(const nlohmann::json& obj,
                                                  const char* key,
                                                  std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    throw DataError(std::string("field '") + key + "' must be a string", line);
  return it->get<std::string>();
}

}  // namespace detail

inline Document document_from_json(const nlohmann::json& obj,
                                   std::size_t line = 0) {
  if (!obj.is_object()) throw DataError("record is not a JSON object", line);
  Document doc;
  auto id = detail::optional_string(obj, "id", line);
  if (!id) throw DataError("missing required field 'id'", line);
  if (id->empty()) throw DataError("field 'id' is empty", line);
  auto text = detail::optional_string(obj, "text", line);
  if (!text) throw DataError("missing required field 'text'", line);
  doc.id = std::move(*id);
  doc.text = std::move(*text);
  doc.source = detail::optional_string(obj, "source", line).value_or("");
  if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
    try {
      if (it->is_string())
        doc.label = parse_label(it->get<std::string>());
      else if (it->is_number_integer())
        doc.label = parse_label(std::to_string(it->get<long long>()));
      else
        throw ConfigError("bad label type");
    } catch (const ConfigError& e) {
      throw DataError(e.what(), line);
    }
  }
  doc.category = detail::optional_string(obj, "category", line);
  doc.group_id = detail::optional_string(obj, "group_id", line);
  doc.zip = detail::optional_string(obj, "zip", line);
  doc.county_fips = detail::optional_string(obj, "county_fips", line);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!detail::known_document_fields().contains(it.key()))
      doc.extra[it.key()] = it.value();
  return doc;
}

inline nlohmann::json document_to_json(const Document& doc) {
  nlohmann::json j = doc.extra;
  j["id"] = doc.id;
  j["text"] = doc.text;
  if (!doc.source.empty()) j["source"] = doc.source;
  if (doc.label) j["label"] = std::string(to_string(*doc.label));
  if (doc.category) j["category"] = *doc.category;
  if (doc.group_id) j["group_id"] = *doc.group_id;
  if (doc.zip) j["zip"] = *doc.zip;
  if (doc.county_fips) j["county_fips"] = *doc.county_fips;
  return j;
}

/// Looks a field up on the document, falling back to preserved extras.
/// Numbers are rendered with their JSON text.
inline std::optional<std::string> document_field(const Document& doc,
                                                 std::string_view field) {
  if (field == "id") return doc.id;
  if (field == "source") return doc.source;
  if (field == "category") return doc.category;
  if (field == "group_id") return doc.group_id;
  if (field == "zip") return doc.zip;
  if (field == "county_fips") return doc.county_fips;
  if (field == "label" && doc.label) return std::string(to_string(*doc.label));
  auto it = doc.extra.find(std::string(field));
  if (it == doc.extra.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

enum class DocumentFormat { jsonl, csv };

inline DocumentFormat format_from_path(std::string_view path) {
  if (path.ends_with(".csv")) return DocumentFormat::csv;
  return DocumentFormat::jsonl;
}

/// Line-at-a-time JSONL reader; blank lines are skipped.
class JsonlDocumentReader {
 public:
  explicit JsonlDocumentReader(std::istream& in) : in_(in) {}

  bool next(Document& doc) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      if (raw.find_first_not_of(" \t") == std::string::npos) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(raw);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what(), line_);
      }
      doc = document_from_json(obj, line_);
      return true;
    }
    return false;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

namespace detail {

inline std::vector<Document> read_csv_documents(std::istream& in) {
  std::vector<Document> docs;
  csv::Row header;
  std::size_t line = 0;
  if (!csv::read_row(in, header, line)) return docs;
  csv::Row row;
  while (true) {
    const std::size_t record_line = line + 1;
    if (!csv::read_row(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(row.size()),
                      record_line);
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < header.size(); ++i) {
      // Empty optional cells mean "absent"; id and text are kept so that
      // an empty text is allowed and an empty id is reported.
      if (row[i].empty() && header[i] != "id" && header[i] != "text") continue;
      obj[header[i]] = row[i];
    }
    docs.push_back(document_from_json(obj, record_line));
  }
  return docs;
}

}  // namespace detail

/// Loads a whole file, in file order. Duplicate ids are an error.
inline std::vector<Document> load_documents(const std::string& path,
                                            DocumentFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;
  try {
    if (format == DocumentFormat::jsonl) {
      JsonlDocumentReader reader(in);
      Document doc;
      while (reader.next(doc)) {
        if (auto [it, fresh] = seen.emplace(doc.id, reader.line()); !fresh)
          throw DataError("duplicate id '" + doc.id + "' (first seen on line " +
                              std::to_string(it->second) + ")",
                          reader.line());
        docs.push_back(std::move(doc));
      }
    } else {
      docs = detail::read_csv_documents(in);
      for (std::size_t i = 0; i < docs.size(); ++i)
        if (!seen.emplace(docs[i].id, i).second)
          throw DataError("duplicate id '" + docs[i].id + "'");
    }
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  return docs;
}

inline std::vector<Document> load_documents(const std::string& path) {
  return load_documents(path, format_from_path(path));
}

inline void write_documents_jsonl(const std::string& path,
                                  const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& d : docs) out << document_to_json(d).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Sampling

struct SampleResult {
  std::vector<Document> docs;
  std::size_t tokens = 0;
  /// True when the corpus ran out before the budget was reached.
  bool exhausted = false;
};

inline SampleResult sample_by_token_budget(const std::vector<Document>& docs,
                                           std::size_t budget, Rng& rng) {
  if (budget == 0) throw ConfigError("token budget must be > 0");
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);

  SampleResult out;
  for (std::size_t i : order) {
    if (out.tokens >= budget) break;
    out.tokens += docs[i].token_count();
    out.docs.push_back(docs[i]);
  }
  out.exhausted = out.tokens < budget;
  return out;
}

inline SampleResult sample_by_token_budget(const std::vector<Document>& docs,
                                           std::size_t budget,
                                           std::uint64_t seed) {
  Rng rng = make_rng({seed});
  auto result = sample_by_token_budget(docs, budget, rng);
  if (result.exhausted)
    std::cerr << "warning: corpus exhausted at " << result.tokens
              << " tokens before reaching budget " << budget << '\n';
  return result;
}

/// Uniform sample of `n` documents without replacement, returned in input
/// order. Returns every document when n >= docs.size().
inline std::vector<Document> sample_documents(const std::vector<Document>& docs, std::size_t n,
                                              std::uint64_t seed) {
  if (n >= docs.size()) return docs;
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng({seed, 0x5a3d});
  shuffle(order, rng);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<Document> out;
  out.reserve(n);
  for (std::size_t i : order) out.push_back(docs[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Training-set construction

struct SourceSpec {
  std::string name;
  std::string path;
  Label label = Label::positive;
  std::size_t budget = 0;
};

struct DatasetSpec {
  std::vector<SourceSpec> sources;
  double test_fraction = 0.125;
  std::uint64_t seed = 0;

  void validate() const {
    if (sources.empty()) throw ConfigError("dataset spec lists no sources");
    for (const auto& s : sources)
      if (s.budget == 0)
        throw ConfigError("source '" + s.name + "' needs budget > 0");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("test_fraction must lie in (0, 1)");
  }

  /// Reads `seed`, `test_fraction` and one [source.NAME] section per source
  /// (keys: path, label, budget).
  static DatasetSpec from_config(const Config& cfg) {
    DatasetSpec spec;
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("", "seed", 0));
    spec.test_fraction = cfg.get_double("", "test_fraction", 0.125);
    for (const auto& section : cfg.sections_with_prefix("source.")) {
      SourceSpec s;
      s.name = section.substr(std::string("source.").size());
      s.path = cfg.get_string(section, "path", "");
      s.label = parse_label(cfg.get_string(section, "label", ""));
      const auto budget = cfg.get_int(section, "budget", 0);
      if (budget <= 0)
        throw ConfigError("source '" + s.name + "' needs budget > 0");
      s.budget = static_cast<std::size_t>(budget);
      spec.sources.push_back(std::move(s));
    }
    spec.validate();
    return spec;
  }

  Config to_config() const {
    Config cfg;
    cfg.set("", "seed", std::to_string(seed));
    cfg.set("", "test_fraction", csv::format_double(test_fraction));
    for (const auto& s : sources) {
      const std::string section = "source." + s.name;
      cfg.set(section, "path", s.path);
      cfg.set(section, "label", std::string(to_string(s.label)));
      cfg.set(section, "budget", std::to_string(s.budget));
    }
    return cfg;
  }
};

struct TrainTestSplit {
  std::vector<Document> train;
  std::vector<Document> test;
  std::vector<std::string> warnings;
};

/// Samples each source to its budget, labels it per the spec, then holds out
/// test_fraction of each class's tokens as the test split.
inline TrainTestSplit build_training_set(
    const DatasetSpec& spec,
    const std::map<std::string, std::vector<Document>>& sources) {
  spec.validate();
  TrainTestSplit out;
  std::vector<Document> by_class[2];
  std::unordered_set<std::string> ids;

  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    const auto& src = spec.sources[i];
    auto it = sources.find(src.name);
    if (it == sources.end())
      throw ConfigError("source '" + src.name + "' not provided");
    if (it->second.empty())
      throw DataError("source '" + src.name + "' is empty");
    Rng rng = make_rng({spec.seed, 1, i});
    auto sample = sample_by_token_budget(it->second, src.budget, rng);
    if (sample.exhausted)
      out.warnings.push_back("source '" + src.name + "' exhausted at " +
                             std::to_string(sample.tokens) + " of " +
                             std::to_string(src.budget) + " tokens");
    for (auto& d : sample.docs) {
      if (!ids.insert(d.id).second)
        throw DataError("duplicate id '" + d.id + "' across sources");
      d.label = src.label;
      if (d.source.empty()) d.source = src.name;
      by_class[static_cast<int>(src.label)].push_back(std::move(d));
    }
  }

  for (int label = 1; label >= 0; --label) {
    auto& docs = by_class[label];
    if (docs.empty()) continue;
    Rng rng = make_rng({spec.seed, 2, static_cast<std::uint64_t>(label)});
    shuffle(docs, rng);
    std::size_t total = 0;
    for (const auto& d : docs) total += d.token_count();
    const double target = spec.test_fraction * static_cast<double>(total);
    std::size_t held = 0;
    for (auto& d : docs) {
      if (static_cast<double>(held) < target) {
        held += d.token_count();
        out.test.push_back(std::move(d));
      } else {
        out.train.push_back(std::move(d));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// School metadata

struct SchoolRecord {
  std::string school_id;
  std::optional<double> n_students;
  std::optional<double> student_teacher_ratio;
  std::optional<bool> is_public;
  std::optional<bool> is_magnet;
  std::optional<bool> is_charter;
  std::optional<double> pct_rural;
  std::optional<double> pct_bachelor;
  std::optional<double> median_home_value;
  std::optional<double> pct_gop_2016;
  std::optional<double> pct_black;
  std::optional<double> pct_asian;
  std::optional<double> pct_mixed;
  std::optional<double> pct_hispanic;
  std::string zip;
  std::string county_fips;
  std::string state;
};

inline const std::vector<std::string>& school_record_fields() {
  static const std::vector<std::string> fields{
      "school_id",   "n_students",   "student_teacher_ratio",
      "is_public",   "is_magnet",    "is_charter",
      "pct_rural",   "pct_bachelor", "median_home_value",
      "pct_gop_2016", "pct_black",   "pct_asian",
      "pct_mixed",   "pct_hispanic", "zip",
      "county_fips", "state"};
  return fields;
}

/// Numeric covariates by name, with booleans as 0/1. nullopt when missing.
inline std::optional<double> school_feature(const SchoolRecord& r,
                                            std::string_view name) {
  auto b = [](const std::optional<bool>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return *v ? 1.0 : 0.0;
  };
  if (name == "n_students") return r.n_students;
  if (name == "student_teacher_ratio") return r.student_teacher_ratio;
  if (name == "is_public") return b(r.is_public);
  if (name == "is_magnet") return b(r.is_magnet);
  if (name == "is_charter") return b(r.is_charter);
  if (name == "pct_rural") return r.pct_rural;
  if (name == "pct_bachelor") return r.pct_bachelor;
  if (name == "median_home_value") return r.median_home_value;
  if (name == "pct_gop_2016") return r.pct_gop_2016;
  if (name == "pct_black") return r.pct_black;
  if (name == "pct_asian") return r.pct_asian;
  if (name == "pct_mixed") return r.pct_mixed;
  if (name == "pct_hispanic") return r.pct_hispanic;
  throw ConfigError("unknown school feature '" + std::string(name) + "'");
}

namespace detail {

inline std::optional<bool> parse_optional_bool(const std::string& s,
                                               std::size_t line,
                                               const std::string& column) {
  if (s.empty()) return std::nullopt;
  if (s == "1" || s == "true" || s == "True" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "False" || s == "no") return false;
  throw DataError("column '" + column + "': not a boolean: '" + s + "'", line);
}

}  // namespace detail

inline void validate_school_record(const SchoolRecord& r, std::size_t line = 0) {
  if (r.school_id.empty()) throw DataError("empty school_id", line);
  auto fraction = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v >= 0.0 && *v <= 1.0))
      throw DataError(std::string(name) + " must lie in [0,1]", line);
  };
  auto positive = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0))
      throw DataError(std::string(name) + " must be > 0", line);
  };
  positive(r.n_students, "n_students");
  positive(r.student_teacher_ratio, "student_teacher_ratio");
  positive(r.median_home_value, "median_home_value");
  fraction(r.pct_rural, "pct_rural");
  fraction(r.pct_bachelor, "pct_bachelor");
  fraction(r.pct_gop_2016, "pct_gop_2016");
  fraction(r.pct_black, "pct_black");
  fraction(r.pct_asian, "pct_asian");
  fraction(r.pct_mixed, "pct_mixed");
  fraction(r.pct_hispanic, "pct_hispanic");
}

/// CSV whose header holds exactly the SchoolRecord field names (any order).
/// Empty cells are missing values.
inline std::vector<SchoolRecord> load_school_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  csv::Row header;
  std::size_t line = 0;
  if (!csv::read_row(in, header, line))
    throw DataError(path + ": missing header row");
  const auto& fields = school_record_fields();
  {
    std::vector<std::string> got = header, want = fields;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got != want)
      throw DataError(path + ": header must contain exactly the fields " +
                          "school_id,n_students,...,state",
                      1);
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  std::vector<SchoolRecord> records;
  csv::Row row;
  while (true) {
    const std::size_t at = line + 1;
    if (!csv::read_row(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size())
      throw DataError(path + ": expected " + std::to_string(header.size()) +
                          " fields",
                      at);
    auto cell = [&](const char* name) -> const std::string& {
      return row[col.at(name)];
    };
    auto num = [&](const char* name) {
      return csv::parse_optional_double(cell(name), at, name);
    };
    auto flag = [&](const char* name) {
      return detail::parse_optional_bool(cell(name), at, name);
    };
    SchoolRecord r;
    r.school_id = cell("school_id");
    r.n_students = num("n_students");
    r.student_teacher_ratio = num("student_teacher_ratio");
    r.is_public = flag("is_public");
    r.is_magnet = flag("is_magnet");
    r.is_charter = flag("is_charter");
    r.pct_rural = num("pct_rural");
    r.pct_bachelor = num("pct_bachelor");
    r.median_home_value = num("median_home_value");
    r.pct_gop_2016 = num("pct_gop_2016");
    r.pct_black = num("pct_black");
    r.pct_asian = num("pct_asian");
    r.pct_mixed = num("pct_mixed");
    r.pct_hispanic = num("pct_hispanic");
    r.zip = cell("zip");
    r.county_fips = cell("county_fips");
    r.state = cell("state");
    validate_school_record(r, at);
    records.push_back(std::move(r));
  }
  return records;
}

inline void write_school_records(const std::string& path,
                                 const std::vector<SchoolRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  csv::write_row(out, school_record_fields());
  auto num = [](const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
  };
  auto flag = [](const std::optional<bool>& v) {
    return v ? std::string(*v ? "1" : "0") : std::string();
  };
  for (const auto& r : records)
    csv::write_row(out, {r.school_id, num(r.n_students),
                         num(r.student_teacher_ratio), flag(r.is_public),
                         flag(r.is_magnet), flag(r.is_charter),
                         num(r.pct_rural), num(r.pct_bachelor),
                         num(r.median_home_value), num(r.pct_gop_2016),
                         num(r.pct_black), num(r.pct_asian), num(r.pct_mixed),
                         num(r.pct_hispanic), r.zip, r.county_fips, r.state});
}

/// Aggregate score of one document group (school, outlet, prompt...).
struct GroupScoreRow {
  std::string group_id;
  double mean_p_high_quality = 0.0;
  std::size_t n_docs = 0;
};

struct SchoolFilters {
  std::size_t min_articles = 100;
  /// Schools whose ZIP median home value is >= this are dropped.
  std::optional<double> max_home_value = 1'000'000.0;
  bool require_school_size = true;
};

struct JoinedSchool {
  SchoolRecord record;
  double mean_p_high_quality = 0.0;
  std::size_t n_articles = 0;
};

struct DroppedGroup {
  std::string group_id;
  std::string reason;
};

/// Per-reason exclusion counts. input == retained + sum of the rest.
struct Attrition {
  std::size_t input = 0;
  std::size_t retained = 0;
  std::vector<std::pair<std::string, std::size_t>> excluded;

  std::size_t excluded_count(std::string_view reason) const {
    for (const auto& [r, n] : excluded)
      if (r == reason) return n;
    return 0;
  }
};

struct JoinResult {
  std::vector<JoinedSchool> rows;
  std::vector<DroppedGroup> dropped;
  Attrition attrition;
};

inline constexpr std::string_view kUnmatched = "unmatched";
inline constexpr std::string_view kTooFewArticles = "too_few_articles";
inline constexpr std::string_view kMissingSchoolSize = "missing_school_size";
inline constexpr std::string_view kHomeValueCap = "home_value_cap";

/// One row per matched school that passes the filters, sorted by school id.
/// Filters apply in order: match, article count, school size, home value.
inline JoinResult join_school_metadata(std::vector<GroupScoreRow> groups,
                                       const std::vector<SchoolRecord>& records,
                                       const SchoolFilters& filters) {
  std::unordered_map<std::string, const SchoolRecord*> by_id;
  for (const auto& r : records)
    if (!by_id.emplace(r.school_id, &r).second)
      throw DataError("duplicate school_id '" + r.school_id + "' in records");

  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.group_id < b.group_id; });

  JoinResult out;
  std::map<std::string_view, std::size_t> counts{{kUnmatched, 0},
                                                 {kTooFewArticles, 0},
                                                 {kMissingSchoolSize, 0},
                                                 {kHomeValueCap, 0}};
  out.attrition.input = groups.size();
  for (const auto& g : groups) {
    std::string_view reason;
    auto it = by_id.find(g.group_id);
    if (it == by_id.end()) {
      reason = kUnmatched;
    } else if (g.n_docs < filters.min_articles) {
      reason = kTooFewArticles;
    } else if (filters.require_school_size && !it->second->n_students) {
      reason = kMissingSchoolSize;
    } else if (filters.max_home_value && it->second->median_home_value &&
               *it->second->median_home_value >= *filters.max_home_value) {
      reason = kHomeValueCap;
    }
    if (!reason.empty()) {
      ++counts[reason];
      out.dropped.push_back({g.group_id, std::string(reason)});
      continue;
    }
    out.rows.push_back({*it->second, g.mean_p_high_quality, g.n_docs});
  }
  out.attrition.retained = out.rows.size();
  for (auto reason : {kUnmatched, kTooFewArticles, kMissingSchoolSize,
                      kHomeValueCap})
    out.attrition.excluded.emplace_back(std::string(reason), counts[reason]);
  return out;
}

// ---------------------------------------------------------------------------
// Imputation

/// Column-oriented table of numeric features with geographic keys.
struct FeatureTable {
  std::vector<std::string> row_ids;
  std::vector<std::string> zip;
  std::vector<std::string> county;
  std::vector<std::string> state;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> values;  // [column][row]

  std::size_t rows() const { return row_ids.size(); }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ConfigError("no column '" + std::string(name) + "'");
  }

  const std::vector<std::optional<double>>& column(std::string_view name) const {
    return values[column_index(name)];
  }
};

enum class ImputeSource { observed, zip, county, state, global };

inline std::string_view to_string(ImputeSource s) {
  switch (s) {
    case ImputeSource::observed: return "observed";
    case ImputeSource::zip: return "zip";
    case ImputeSource::county: return "county";
    case ImputeSource::state: return "state";
    case ImputeSource::global: return "global";
  }
  return "?";
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw NumericError("median of empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return (lower + upper) / 2.0;
}

struct ImputeResult {
  FeatureTable table;
  std::vector<ImputeSource> provenance;  // one per row
};

/// Fills missing entries of `feature` with the median of observed values in
/// the same ZIP, else county, else state, else the whole column.
inline ImputeResult impute_missing(FeatureTable table, std::string_view feature) {
  auto& col = table.values[table.column_index(feature)];
  const std::size_t n = table.rows();

  std::map<std::string, std::vector<double>> by_zip, by_county, by_state;
  std::vector<double> all;
  for (std::size_t i = 0; i < n; ++i) {
    if (!col[i]) continue;
    by_zip[table.zip[i]].push_back(*col[i]);
    by_county[table.county[i]].push_back(*col[i]);
    by_state[table.state[i]].push_back(*col[i]);
    all.push_back(*col[i]);
  }
  if (all.empty() && n > 0)
    throw DataError("feature '" + std::string(feature) +
                    "' is missing for every row");

  ImputeResult out;
  out.provenance.assign(n, ImputeSource::observed);
  std::vector<std::optional<double>> filled = col;
  for (std::size_t i = 0; i < n; ++i) {
    if (col[i]) continue;
    auto lookup = [](const auto& groups, const std::string& key) -> const std::vector<double>* {
      if (key.empty()) return nullptr;
      auto it = groups.find(key);
      return it == groups.end() ? nullptr : &it->second;
    };
    if (auto v = lookup(by_zip, table.zip[i])) {
      filled[i] = median(*v);
      out.provenance[i] = ImputeSource::zip;
    } else if (auto v = lookup(by_county, table.county[i])) {
      filled[i] = median(*v);
      out.provenance[i] = ImputeSource::county;
    } else if (auto v = lookup(by_state, table.state[i])) {
      filled[i] = median(*v);
      out.provenance[i] = ImputeSource::state;
    } else {
      filled[i] = median(all);
      out.provenance[i] = ImputeSource::global;
    }
  }
  col = std::move(filled);
  out.table = std::move(table);
  return out;
}

inline FeatureTable school_feature_table(const std::vector<JoinedSchool>& rows,
                                         const std::vector<std::string>& features) {
  FeatureTable t;
  t.columns = features;
  t.values.assign(features.size(), {});
  for (const auto& row : rows) {
    t.row_ids.push_back(row.record.school_id);
    t.zip.push_back(row.record.zip);
    t.county.push_back(row.record.county_fips);
    t.state.push_back(row.record.state);
    for (std::size_t c = 0; c < features.size(); ++c)
      t.values[c].push_back(school_feature(row.record, features[c]));
  }
  return t;
}

}  // namespace qualgate

#endif  // QUALGATE_CORPUS_HPP_
