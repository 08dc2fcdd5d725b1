// qualgate command-line driver.
//
//   qualgate build-dataset --config dataset.ini --train-out train.jsonl --test-out test.jsonl
//   qualgate train   --config train.ini --train train.jsonl [--test test.jsonl] --model m.qf
//   qualgate search  --train train.jsonl --val val.jsonl --trials 100 --seed 7 --log trials.csv
//   qualgate score   --model m.qf --in docs.jsonl --out scores.jsonl [--threads N]
//   qualgate eval    --model m.qf --in test.jsonl [--out metrics.json]
//   qualgate topics fit|show ...
//   qualgate audit docs|schools|alignment ...
//
// Exit status: 0 on success, 1 on an operation error, 2 on a usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qualgate/audit.hpp"
#include "qualgate/classifier.hpp"
#include "qualgate/config.hpp"
#include "qualgate/corpus.hpp"
#include "qualgate/errors.hpp"
#include "qualgate/parallel.hpp"
#include "qualgate/topics.hpp"

namespace fs = std::filesystem;
using namespace qualgate;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads(1);
};

Config load_config(const std::string& path) {
  return path.empty() ? Config{} : Config::from_file(path);
}

// Snapshot of the settings a run actually used, so that it can be repeated.
// Thread counts are left out: they never change output bytes.
class Snapshot {
 public:
  Snapshot(std::string command, Config base) : cfg_(std::move(base)) {
    cfg_.set("run", "command", std::move(command));
    cfg_.set("run", "qualgate_version", kVersion);
  }

  void set(const std::string& key, const std::string& value) { cfg_.set("run", key, value); }
  Config& config() { return cfg_; }

  void write(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    cfg_.write(path.string());
  }

 private:
  Config cfg_;
};

fs::path snapshot_path_for(const std::string& output) {
  return fs::path(output + ".resolved.ini");
}

std::vector<QualityScore> load_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<QualityScore> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(raw);
      out.push_back({obj.at("id").get<std::string>(), obj.at("p_high_quality").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": " + e.what(), line);
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
}

// --------------------------------------------------------------------------

struct BuildDatasetArgs {
  std::string train_out, test_out;
};

int run_build_dataset(const Common& c, const BuildDatasetArgs& a) {
  if (c.config_path.empty()) throw ConfigError("build-dataset needs --config");
  const Config cfg = load_config(c.config_path);
  DatasetSpec spec = DatasetSpec::from_config(cfg);
  if (c.seed) spec.seed = *c.seed;

  const fs::path base = fs::path(c.config_path).parent_path();
  std::map<std::string, std::vector<Document>> sources;
  for (auto& s : spec.sources) {
    fs::path p(s.path);
    if (p.is_relative()) p = base / p;
    sources.emplace(s.name, load_documents(p.string()));
  }
  const auto split = build_training_set(spec, sources);
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
  write_documents_jsonl(a.train_out, split.train);
  write_documents_jsonl(a.test_out, split.test);

  Snapshot snap("build-dataset", spec.to_config());
  snap.set("train_out", a.train_out);
  snap.set("test_out", a.test_out);
  snap.set("train_docs", std::to_string(split.train.size()));
  snap.set("test_docs", std::to_string(split.test.size()));
  snap.write(snapshot_path_for(a.train_out));
  std::cerr << "train: " << split.train.size() << " docs, test: " << split.test.size()
            << " docs (seed " << spec.seed << ")\n";
  return 0;
}

struct TrainArgs {
  std::string train, test, model;
};

int run_train(const Common& c, const TrainArgs& a) {
  const Config cfg = load_config(c.config_path);
  TrainConfig tc = TrainConfig::from_config(cfg);
  if (c.seed) tc.seed = *c.seed;
  const auto docs = load_documents(a.train);
  auto result = train_with_trace(docs, tc, c.threads);
  if (!a.test.empty()) {
    const auto test = load_documents(a.test);
    result.model.set_metrics(evaluate(result.model, test, 0.5, c.threads));
  }
  save_model(result.model, a.model);

  Snapshot snap("train", cfg);
  tc.write_to(snap.config());
  snap.set("train", a.train);
  snap.set("test", a.test);
  snap.set("model", a.model);
  snap.set("epochs", std::to_string(result.trace.epochs));
  snap.set("converged", result.trace.converged ? "true" : "false");
  snap.write(snapshot_path_for(a.model));

  std::cerr << "trained on " << docs.size() << " docs, " << result.model.nonzero_weights().size()
            << " nonzero weights, " << result.trace.epochs << " epochs (seed " << tc.seed << ")\n";
  if (const auto& m = result.model.metrics())
    std::cerr << "test: precision " << m->precision << " recall " << m->recall << " f1 " << m->f1
              << '\n';
  return 0;
}

struct SearchArgs {
  std::string train, val, log, model;
  std::size_t trials = 100;
};

int run_search(const Common& c, const SearchArgs& a) {
  const Config cfg = load_config(c.config_path);
  const TrainConfig base = TrainConfig::from_config(cfg);
  const std::uint64_t seed = c.seed.value_or(0);
  const auto train_docs = load_documents(a.train);
  const auto val_docs = load_documents(a.val);
  const SearchSpace space;
  const auto result = random_search(space, a.trials, train_docs, val_docs, seed, base, c.threads);

  {
    if (fs::path(a.log).has_parent_path()) fs::create_directories(fs::path(a.log).parent_path());
    std::ofstream out(a.log, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + a.log);
    write_trial_log(out, result.trials, seed);
  }
  if (!a.model.empty()) save_model(result.best, a.model);

  Snapshot snap("search", cfg);
  base.write_to(snap.config());
  result.trials[result.best_index].config.write_to(snap.config(), "best");
  snap.set("search_seed", std::to_string(seed));
  snap.set("trials", std::to_string(a.trials));
  snap.set("best_trial", std::to_string(result.best_index));
  snap.set("best_val_f1", csv::format_double(result.trials[result.best_index].val_f1));
  snap.write(snapshot_path_for(a.log));
  std::cerr << "best trial " << result.best_index << " val F1 "
            << result.trials[result.best_index].val_f1 << " (search seed " << seed << ")\n";
  return 0;
}

struct ScoreArgs {
  std::string model, in, out;
  std::size_t batch = 4096;
};

// Reads a bounded batch, scores it on the worker pool and writes it in input
// order before reading the next one.
int run_score(const Common& c, const ScoreArgs& a) {
  if (a.batch == 0) throw ConfigError("--batch must be > 0");
  const FilterModel model = load_model(a.model);
  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw IoError("cannot read " + a.in);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + a.out);

  JsonlDocumentReader reader(in);
  std::vector<Document> batch;
  std::vector<std::string_view> texts;
  std::size_t total = 0;
  bool more = true;
  while (more) {
    batch.clear();
    Document doc;
    while (batch.size() < a.batch && (more = reader.next(doc))) batch.push_back(std::move(doc));
    if (batch.empty()) break;
    texts.clear();
    for (const auto& d : batch) texts.push_back(d.text);
    const auto p = score_texts(model, texts, c.threads);
    for (std::size_t i = 0; i < batch.size(); ++i)
      out << nlohmann::json{{"id", batch[i].id}, {"p_high_quality", p[i]}}.dump() << '\n';
    total += batch.size();
  }
  if (!out.flush()) throw IoError("write failed: " + a.out);

  Snapshot snap("score", Config{});
  model.train_config().write_to(snap.config(), "model");
  snap.set("model", a.model);
  snap.set("in", a.in);
  snap.set("out", a.out);
  snap.set("documents", std::to_string(total));
  snap.write(snapshot_path_for(a.out));
  return 0;
}

struct EvalArgs {
  std::string model, in, out;
  double threshold = 0.5;
};

int run_eval(const Common& c, const EvalArgs& a) {
  const FilterModel model = load_model(a.model);
  const auto docs = load_documents(a.in);
  const auto report = evaluate(model, docs, a.threshold, c.threads);
  const std::string body = nlohmann::json(report).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << body;
  } else {
    write_text(a.out, body);
  }
  Snapshot snap("eval", Config{});
  model.train_config().write_to(snap.config(), "model");
  snap.set("model", a.model);
  snap.set("in", a.in);
  snap.set("threshold", csv::format_double(a.threshold));
  snap.write(snapshot_path_for(a.out.empty() ? a.in + ".eval" : a.out));
  return 0;
}

// --------------------------------------------------------------------------
// Topics

struct TopicsFitArgs {
  std::string in, out;
  std::optional<std::size_t> k;
  std::optional<int> iterations;
};

int run_topics_fit(const Common& c, const TopicsFitArgs& a) {
  const Config cfg = load_config(c.config_path);
  VocabConfig vc;
  vc.min_df = static_cast<std::size_t>(cfg.get_int("vocab", "min_df", static_cast<long long>(vc.min_df)));
  vc.max_df = cfg.get_double("vocab", "max_df", vc.max_df);
  vc.max_terms = static_cast<std::size_t>(
      cfg.get_int("vocab", "max_terms", static_cast<long long>(vc.max_terms)));
  vc.min_token_length = static_cast<std::size_t>(
      cfg.get_int("vocab", "min_token_length", static_cast<long long>(vc.min_token_length)));
  vc.stopword_list_id = cfg.get_string("vocab", "stopword_list_id", vc.stopword_list_id);

  LdaConfig lc;
  lc.num_topics = static_cast<std::size_t>(
      cfg.get_int("lda", "num_topics", static_cast<long long>(lc.num_topics)));
  if (auto alpha = cfg.get("lda", "alpha")) lc.alpha = cfg.get_double("lda", "alpha", 0.0);
  lc.beta = cfg.get_double("lda", "beta", lc.beta);
  lc.iterations = static_cast<int>(cfg.get_int("lda", "iterations", lc.iterations));
  lc.seed = static_cast<std::uint64_t>(cfg.get_int("lda", "seed", 0));
  if (a.k) lc.num_topics = *a.k;
  if (a.iterations) lc.iterations = *a.iterations;
  if (c.seed) lc.seed = *c.seed;

  auto docs = load_documents(a.in);
  std::sort(docs.begin(), docs.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  std::vector<std::string_view> texts;
  for (const auto& d : docs) texts.push_back(d.text);
  const auto vocab = build_vocab(texts, vc);
  if (vocab.size() == 0) throw DataError("vocabulary is empty after filtering");
  const auto fit = fit_lda(texts, vocab, lc);
  save_topic_model(fit.model, a.out);

  Snapshot snap("topics fit", cfg);
  auto& s = snap.config();
  s.set("vocab", "min_df", std::to_string(vc.min_df));
  s.set("vocab", "max_df", csv::format_double(vc.max_df));
  s.set("vocab", "max_terms", std::to_string(vc.max_terms));
  s.set("vocab", "min_token_length", std::to_string(vc.min_token_length));
  s.set("vocab", "stopword_list_id", vc.stopword_list_id);
  s.set("lda", "num_topics", std::to_string(lc.num_topics));
  s.set("lda", "alpha", csv::format_double(lc.resolved_alpha()));
  s.set("lda", "beta", csv::format_double(lc.beta));
  s.set("lda", "iterations", std::to_string(lc.iterations));
  s.set("lda", "seed", std::to_string(lc.seed));
  snap.set("in", a.in);
  snap.set("out", a.out);
  snap.set("vocab_size", std::to_string(vocab.size()));
  snap.write(snapshot_path_for(a.out));
  std::cerr << "fitted " << lc.num_topics << " topics over " << vocab.size() << " terms (seed "
            << lc.seed << ")\n";
  return 0;
}

struct TopicsShowArgs {
  std::string model;
  std::size_t top = 10;
};

int run_topics_show(const TopicsShowArgs& a) {
  const auto model = load_topic_model(a.model);
  std::cout << render_top_words_markdown(model, std::min(a.top, model.vocab_size()));
  return 0;
}

// --------------------------------------------------------------------------
// Audits

struct AuditDocsArgs {
  std::string docs, scores, topics, out, formats = "csv,md";
  std::size_t omit_topic = 0;
  std::optional<std::size_t> sample;
};

int run_audit_docs(const Common& c, const AuditDocsArgs& a) {
  const Config cfg = load_config(c.config_path);
  const std::size_t omit = static_cast<std::size_t>(
      cfg.get_int("doc_level", "omitted_topic", static_cast<long long>(a.omit_topic)));
  const int digits = static_cast<int>(cfg.get_int("report", "digits", 3));
  const auto sample = a.sample ? *a.sample
                               : static_cast<std::size_t>(cfg.get_int("doc_level", "sample", 0));
  const auto seed = c.seed ? *c.seed
                           : static_cast<std::uint64_t>(cfg.get_int("doc_level", "seed", 0));
  auto docs = load_documents(a.docs);
  if (sample > 0) docs = sample_documents(docs, sample, seed);
  const auto scores = load_scores(a.scores);
  const auto model = load_topic_model(a.topics);
  const auto report = doc_level_audit(docs, scores, model, omit, c.threads, digits);
  emit_report(report, a.out, parse_report_formats(a.formats));

  Snapshot snap("audit docs", cfg);
  snap.config().set("doc_level", "omitted_topic", std::to_string(omit));
  snap.config().set("doc_level", "sample", std::to_string(sample));
  snap.config().set("doc_level", "seed", std::to_string(seed));
  snap.config().set("report", "digits", std::to_string(digits));
  snap.set("docs", a.docs);
  snap.set("scores", a.scores);
  snap.set("topics", a.topics);
  snap.set("topic_model_seed", std::to_string(model.seed));
  snap.write(fs::path(a.out) / "resolved_config.ini");
  return 0;
}

struct AuditSchoolsArgs {
  std::string docs, scores, schools, out, formats = "csv,md";
  std::string feature_set;
};

int run_audit_schools(const Common& c, const AuditSchoolsArgs& a) {
  Config cfg = load_config(c.config_path);
  if (!a.feature_set.empty()) cfg.set("features", "set", a.feature_set);
  const auto dc = DemographicConfig::from_config(cfg);
  const auto docs = load_documents(a.docs);
  const auto scores = load_scores(a.scores);
  const auto records = load_school_records(a.schools);
  const auto groups = group_scores(docs, scores, dc.aggregation);
  const auto report = demographic_audit(groups, records, dc);
  emit_report(report, a.out, parse_report_formats(a.formats));

  Snapshot snap("audit schools", cfg);
  for (const auto& [k, v] : dc.resolved()) {
    const auto dot = k.find('.');
    snap.config().set(k.substr(0, dot), k.substr(dot + 1), v);
  }
  snap.set("docs", a.docs);
  snap.set("scores", a.scores);
  snap.set("schools", a.schools);
  snap.write(fs::path(a.out) / "resolved_config.ini");
  return 0;
}

struct AuditAlignmentArgs {
  std::string docs, scores, out, formats = "csv,md";
  std::string mode;
  std::string group_field = "category";
  std::string band_field = "band";
  std::string rating_field = "rating";
};

int run_audit_alignment(const Common& c, const AuditAlignmentArgs& a) {
  const Config cfg = load_config(c.config_path);
  AlignmentConfig ac;
  ac.mode = parse_alignment_mode(a.mode.empty() ? cfg.get_string("alignment", "mode", "ks")
                                                : a.mode);
  ac.alpha = cfg.get_double("alignment", "alpha", ac.alpha);
  ac.baseline_prompt = cfg.get_string("alignment", "baseline_prompt", "");
  ac.low_below = cfg.get_double("alignment", "low_below", ac.low_below);
  ac.high_from = cfg.get_double("alignment", "high_from", ac.high_from);
  ac.digits = static_cast<int>(cfg.get_int("report", "digits", ac.digits));
  if (!(ac.low_below <= ac.high_from)) throw ConfigError("alignment.low_below must be <= high_from");

  const auto docs = load_documents(a.docs);
  const auto scores = load_scores(a.scores);
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id[s.doc_id] = s.p_high_quality;

  std::vector<AlignmentItem> items;
  for (const auto& d : docs) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw DataError("no score for document '" + d.id + "'");
    auto group = document_field(d, a.group_field);
    if (!group) throw DataError("document '" + d.id + "' has no '" + a.group_field + "' field");
    AlignmentItem item{d.id, *group, document_field(d, a.band_field), std::nullopt, it->second};
    if (auto r = document_field(d, a.rating_field))
      item.rating = csv::parse_optional_double(*r, 0, a.rating_field);
    items.push_back(std::move(item));
  }
  const auto report = alignment_audit(std::move(items), ac);
  emit_report(report, a.out, parse_report_formats(a.formats));

  Snapshot snap("audit alignment", cfg);
  for (const auto& [k, v] : ac.resolved()) snap.config().set("alignment", k, v);
  snap.set("docs", a.docs);
  snap.set("scores", a.scores);
  snap.set("group_field", a.group_field);
  snap.set("band_field", a.band_field);
  snap.set("rating_field", a.rating_field);
  snap.write(fs::path(a.out) / "resolved_config.ini");
  if (!report.verdict.empty()) std::cout << report.verdict << '\n';
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config) sub->add_option("--config", c.config_path, "INI configuration file");
  sub->add_option("--seed", c.seed, "Seed override");
  sub->add_option("--threads", c.threads, "Worker threads (default: QUALGATE_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hashed n-gram quality filter and score audits"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;

  BuildDatasetArgs bd;
  auto* build = app.add_subcommand("build-dataset", "Sample sources into train/test splits");
  add_common(build, common);
  build->add_option("--train-out", bd.train_out)->required();
  build->add_option("--test-out", bd.test_out)->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a quality classifier");
  add_common(train_cmd, common);
  train_cmd->add_option("--train", tr.train, "Labeled training documents")->required();
  train_cmd->add_option("--test", tr.test, "Labeled held-out documents");
  train_cmd->add_option("--model", tr.model, "Output model file")->required();

  SearchArgs se;
  auto* search = app.add_subcommand("search", "Random hyperparameter search");
  add_common(search, common);
  search->add_option("--train", se.train)->required();
  search->add_option("--val", se.val)->required();
  search->add_option("--trials", se.trials)->check(CLI::PositiveNumber);
  search->add_option("--log", se.log, "Trial log CSV")->required();
  search->add_option("--model", se.model, "Write the best model here");

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score a JSONL corpus");
  add_common(score_cmd, common, false);
  score_cmd->add_option("--model", sc.model)->required();
  score_cmd->add_option("--in", sc.in)->required();
  score_cmd->add_option("--out", sc.out)->required();
  score_cmd->add_option("--batch", sc.batch, "Documents held in memory at once");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Precision, recall and F1 on labeled documents");
  add_common(eval_cmd, common, false);
  eval_cmd->add_option("--model", ev.model)->required();
  eval_cmd->add_option("--in", ev.in)->required();
  eval_cmd->add_option("--out", ev.out, "Metrics JSON (default: stdout)");
  eval_cmd->add_option("--threshold", ev.threshold)->check(CLI::Range(0.0, 1.0));

  auto* topics = app.add_subcommand("topics", "Topic models");
  topics->require_subcommand(1);
  TopicsFitArgs tf;
  auto* tfit = topics->add_subcommand("fit", "Fit LDA by collapsed Gibbs sampling");
  add_common(tfit, common);
  tfit->add_option("--in", tf.in)->required();
  tfit->add_option("--out", tf.out)->required();
  tfit->add_option("--k", tf.k, "Number of topics");
  tfit->add_option("--iterations", tf.iterations, "Gibbs sweeps");
  TopicsShowArgs ts;
  auto* tshow = topics->add_subcommand("show", "Print top words per topic");
  tshow->add_option("--model", ts.model)->required();
  tshow->add_option("--top", ts.top)->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("audit", "Audit quality scores");
  audit->require_subcommand(1);
  AuditDocsArgs ad;
  auto* adocs = audit->add_subcommand("docs", "Document-level regression");
  add_common(adocs, common);
  adocs->add_option("--docs", ad.docs)->required();
  adocs->add_option("--scores", ad.scores)->required();
  adocs->add_option("--topics", ad.topics)->required();
  adocs->add_option("--omit-topic", ad.omit_topic);
  adocs->add_option("--sample", ad.sample, "Audit a uniform sample of this many documents");
  adocs->add_option("--out", ad.out, "Report directory")->required();
  adocs->add_option("--formats", ad.formats, "csv,md");
  AuditSchoolsArgs as;
  auto* aschools = audit->add_subcommand("schools", "School-level demographic regression");
  add_common(aschools, common);
  aschools->add_option("--docs", as.docs)->required();
  aschools->add_option("--scores", as.scores)->required();
  aschools->add_option("--schools", as.schools, "School metadata CSV")->required();
  aschools->add_option("--feature-set", as.feature_set, "base, race or gop");
  aschools->add_option("--out", as.out, "Report directory")->required();
  aschools->add_option("--formats", as.formats, "csv,md");
  AuditAlignmentArgs aa;
  auto* aalign = audit->add_subcommand("alignment", "Score distributions by group");
  add_common(aalign, common);
  aalign->add_option("--docs", aa.docs)->required();
  aalign->add_option("--scores", aa.scores)->required();
  aalign->add_option("--mode", aa.mode, "ks, prompt-regression or genre");
  aalign->add_option("--group-field", aa.group_field);
  aalign->add_option("--band-field", aa.band_field);
  aalign->add_option("--rating-field", aa.rating_field);
  aalign->add_option("--out", aa.out, "Report directory")->required();
  aalign->add_option("--formats", aa.formats, "csv,md");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (build->parsed()) return run_build_dataset(common, bd);
    if (train_cmd->parsed()) return run_train(common, tr);
    if (search->parsed()) return run_search(common, se);
    if (score_cmd->parsed()) return run_score(common, sc);
    if (eval_cmd->parsed()) return run_eval(common, ev);
    if (tfit->parsed()) return run_topics_fit(common, tf);
    if (tshow->parsed()) return run_topics_show(ts);
    if (adocs->parsed()) return run_audit_docs(common, ad);
    if (aschools->parsed()) return run_audit_schools(common, as);
    if (aalign->parsed()) return run_audit_alignment(common, aa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
