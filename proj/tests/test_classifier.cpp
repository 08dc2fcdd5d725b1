#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qualgate/classifier.hpp"
#include "qualgate/config.hpp"
#include "qualgate/stats.hpp"
#include "test_support.hpp"

using namespace qualgate;
using qualgate::testing::read_file;
using qualgate::testing::separable_corpus;
using qualgate::testing::TempDir;
using qualgate::testing::write_file;

namespace {

Document labeled(std::string id, std::string text, Label label) {
  Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  d.label = label;
  return d;
}

std::vector<Document> toy_four() {
  return {labeled("p1", "excellent prose", Label::positive),
          labeled("p2", "careful excellent writing", Label::positive),
          labeled("n1", "click here now", Label::negative),
          labeled("n2", "buy now cheap", Label::negative)};
}

TrainConfig small_config() {
  TrainConfig c;
  c.featurizer.hash_dim = 1 << 16;
  return c;
}

TrainingMatrix random_problem(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<SparseFeatureVector> vecs;
  std::vector<double> labels;
  for (std::size_t i = 0; i < rows; ++i) {
    SparseFeatureVector v;
    v.dim = 1024;
    for (std::uint32_t j = 0; j < cols; ++j)
      if (uniform01(rng) < 0.6) v.entries.push_back({j, uniform_real(rng, -1.0, 1.0)});
    vecs.push_back(v);
    labels.push_back(uniform01(rng) < 0.5 ? 1.0 : -1.0);
  }
  return build_training_matrix(vecs, labels);
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.C = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.C = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.tol = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_regularization("L3"), ConfigError);
  EXPECT_EQ(parse_regularization("l1"), Regularization::l1);
}

TEST(TrainConfig, BestTrialConfigFile) {
  const auto c = TrainConfig::from_config(Config::from_file(QUALGATE_SOURCE_DIR "/configs/best_trial.ini"));
  EXPECT_EQ(c.regularization, Regularization::l1);
  EXPECT_EQ(c.C, 0.977778);
  EXPECT_EQ(c.tol, 0.000816);
  EXPECT_EQ(c.seed, 44555u);
  EXPECT_EQ(c.featurizer.ngram_lo, 1);
  EXPECT_EQ(c.featurizer.ngram_hi, 2);
  EXPECT_FALSE(c.featurizer.remove_stopwords);
  EXPECT_EQ(c, TrainConfig{});
  Config out;
  c.write_to(out);
  EXPECT_EQ(TrainConfig::from_config(Config::from_string(out.to_string())), c);
}

TEST(Sigmoid, RangeAndMonotone) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  double prev = 0.0;
  for (double m = -30.0; m <= 30.0; m += 0.5) {
    const double p = sigmoid(m);
    EXPECT_GT(p, prev);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    prev = p;
  }
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
  EXPECT_TRUE(std::isfinite(sigmoid(800.0)));
}

TEST(Score, ZeroModelIsOneHalf) {
  const FilterModel m(small_config());
  for (const char* t : {"", "anything at all", "ünïcödé"}) EXPECT_EQ(m.score_text(t), 0.5);
}

TEST(Score, EmptyTextIsSigmoidOfBias) {
  FilterModel m(small_config());
  m.set_bias(1.3);
  EXPECT_EQ(m.score_text(""), sigmoid(1.3));
}

TEST(Score, HandComputedThreeFeatureModel) {
  TrainConfig cfg = small_config();
  cfg.featurizer.l2_normalize = false;
  cfg.featurizer.ngram_hi = 2;
  FilterModel m(cfg);
  const std::uint32_t mask = cfg.featurizer.hash_dim - 1;
  auto idx = [&](const char* g) { return murmurhash3_x86_32(g, 0) & mask; };
  auto sgn = [&](const char* g) { return (murmurhash3_x86_32(g, 0) >> 31) ? -1.0 : 1.0; };
  m.set_weight(idx("good"), 0.7);
  m.set_weight(idx("text"), -0.2);
  m.set_weight(idx("good text"), 1.1);
  m.set_bias(-0.4);
  const double margin = -0.4 + 0.7 * sgn("good") - 0.2 * sgn("text") + 1.1 * sgn("good text");
  EXPECT_NEAR(m.score_text("good text"), 1.0 / (1.0 + std::exp(-margin)), 1e-12);
  EXPECT_THROW(m.set_weight(cfg.featurizer.hash_dim, 1.0), ConfigError);
}

TEST(Train, SeparableToySetReachesFullAccuracy) {
  const auto docs = toy_four();
  TrainConfig cfg = small_config();
  cfg.C = 10.0;
  cfg.tol = 1e-6;
  const auto model = train(docs, cfg);
  for (const auto& d : docs)
    EXPECT_EQ(model.score_text(d.text) >= 0.5, *d.label == Label::positive) << d.id;
  EXPECT_EQ(evaluate(model, docs).accuracy, 1.0);
}

TEST(Train, TinyCWithL1ZeroesAllWeights) {
  TrainConfig cfg = small_config();
  cfg.C = 1e-6;
  const auto docs = separable_corpus(40, 1);
  const auto model = train(docs, cfg);
  EXPECT_TRUE(model.nonzero_weights().empty());
  EXPECT_EQ(model.score_text("pos1 pos2"), sigmoid(model.bias()));
}

TEST(Train, SingleClassIsError) {
  auto docs = toy_four();
  docs.resize(2);
  EXPECT_THROW(train(docs, small_config()), DataError);
  auto unlabeled = toy_four();
  unlabeled[0].label.reset();
  EXPECT_THROW(train(unlabeled, small_config()), DataError);
}

TEST(Train, ObjectiveNonIncreasing) {
  for (auto reg : {Regularization::l1, Regularization::l2}) {
    TrainConfig cfg = small_config();
    cfg.regularization = reg;
    cfg.tol = 1e-9;
    cfg.max_epochs = 200;
    const auto result = train_with_trace(separable_corpus(60, 2), cfg);
    const auto& f = result.trace.objective;
    ASSERT_GE(f.size(), 2u);
    for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LE(f[i], f[i - 1]);
    EXPECT_LE(f.back(), f.front());
  }
}

TEST(Train, L1ProducesExactZeros) {
  TrainConfig cfg = small_config();
  cfg.C = 0.01;
  const auto docs = separable_corpus(60, 3);
  const auto X = featurize_training_set(docs, cfg.featurizer);
  const auto result = train_matrix(X, cfg);
  const auto nonzero = result.model.nonzero_weights().size();
  EXPECT_GE(X.cols() - nonzero, X.cols() / 2) << nonzero << " of " << X.cols();
}

TEST(Train, DeterministicAndThreadIndependent) {
  const auto docs = separable_corpus(80, 4);
  const TrainConfig cfg = small_config();
  const auto a = train(docs, cfg, 1);
  const auto b = train(docs, cfg, 3);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.bias(), b.bias());
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng = make_rng({2024});
  for (int problem = 0; problem < 20; ++problem) {
    const auto X = random_problem(rng, 12, 6);
    std::vector<double> w(X.cols());
    for (auto& v : w) v = uniform_real(rng, -1.0, 1.0);
    const double b = uniform_real(rng, -0.5, 0.5);
    const double C = 0.7;
    std::vector<double> grad;
    double grad_b = 0.0;
    logistic_loss_gradient(X, w, b, C, grad, grad_b);
    const double h = 1e-5;
    for (std::size_t j = 0; j <= w.size(); ++j) {
      double numeric;
      if (j < w.size()) {
        auto wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        numeric = (logistic_loss(X, wp, b, C) - logistic_loss(X, wm, b, C)) / (2 * h);
      } else {
        numeric = (logistic_loss(X, w, b + h, C) - logistic_loss(X, w, b - h, C)) / (2 * h);
      }
      const double analytic = j < w.size() ? grad[j] : grad_b;
      EXPECT_LT(std::fabs(analytic - numeric), 1e-6 * std::max(1.0, std::fabs(numeric)));
    }
  }
}

TEST(Evaluate, Formulas) {
  EXPECT_DOUBLE_EQ(make_eval_report(5, 5, 0, 0, 0.5).precision, 0.5);
  const auto all_positive = make_eval_report(5, 5, 0, 0, 0.5);
  EXPECT_DOUBLE_EQ(all_positive.recall, 1.0);
  EXPECT_DOUBLE_EQ(all_positive.f1, 2.0 / 3.0);
  const auto perfect = make_eval_report(3, 0, 4, 0, 0.5);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);
  const auto none = make_eval_report(0, 0, 4, 3, 0.5);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(none.total(), 7u);
}

TEST(Evaluate, AllPredictedPositiveOnBalancedSet) {
  FilterModel m(small_config());
  m.set_bias(2.0);
  const auto docs = toy_four();
  const auto r = evaluate(m, docs);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_THROW(evaluate(m, {}), DataError);
}

TEST(ModelFile, RoundTripScoresBitExact) {
  TempDir dir;
  const auto docs = separable_corpus(100, 5);
  auto model = train(docs, small_config());
  model.set_metrics(evaluate(model, docs));
  save_model(model, dir.file("m.qf"));
  const auto loaded = load_model(dir.file("m.qf"));
  EXPECT_EQ(loaded.train_config(), model.train_config());
  EXPECT_EQ(loaded.bias(), model.bias());
  EXPECT_EQ(loaded.weights(), model.weights());
  ASSERT_TRUE(loaded.metrics());
  EXPECT_EQ(loaded.metrics()->f1, model.metrics()->f1);
  for (const auto& d : docs) EXPECT_EQ(loaded.score_text(d.text), model.score_text(d.text));
  // Saving again produces the same bytes.
  save_model(loaded, dir.file("m2.qf"));
  EXPECT_EQ(read_file(dir.file("m.qf")), read_file(dir.file("m2.qf")));
}

TEST(ModelFile, EveryFlippedByteIsRejected) {
  FilterModel model(small_config());
  model.set_weight(7, 0.25);
  model.set_weight(900, -1.5);
  model.set_bias(0.1);
  const auto bytes = serialize_model(model);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto corrupt = bytes;
    corrupt[i] = static_cast<char>(corrupt[i] ^ 0x01);
    EXPECT_THROW(deserialize_model(corrupt), ModelFormatError) << "byte " << i;
  }
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 1)), ModelFormatError);
}

TEST(ModelFile, ChecksumErrorIsNamed) {
  FilterModel model(small_config());
  model.set_weight(3, 1.0);
  auto bytes = serialize_model(model);
  bytes[bytes.size() - 2] ^= 0x10;
  try {
    deserialize_model(bytes);
    FAIL();
  } catch (const ModelFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
  }
}

TEST(ModelFile, FutureVersionIsUnsupported) {
  auto bytes = serialize_model(FilterModel(small_config()));
  bytes[8] = static_cast<char>(kModelFormatVersion + 1);
  try {
    deserialize_model(bytes);
    FAIL();
  } catch (const ModelFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported"), std::string::npos) << e.what();
  }
}

TEST(ScoreTexts, ThreadCountDoesNotChangeOutput) {
  const auto docs = separable_corpus(200, 6);
  const auto model = train(docs, small_config());
  std::vector<std::string_view> texts;
  for (const auto& d : docs) texts.push_back(d.text);
  const auto one = score_texts(model, texts, 1);
  for (unsigned t : {2u, 3u, 8u, 500u}) EXPECT_EQ(score_texts(model, texts, t), one);
}

TEST(Search, SampledValuesWithinRanges) {
  const SearchSpace space;
  const TrainConfig base;
  for (std::size_t i = 0; i < 2000; ++i) {
    const auto c = sample_trial(space, base, 17, i);
    EXPECT_GE(c.C, 0.0);
    EXPECT_LT(c.C, 1.0);
    EXPECT_GE(c.tol, 1e-4);
    EXPECT_LE(c.tol, 1e-2);
    EXPECT_LE(c.seed, 100000u);
    const auto range = std::make_pair(c.featurizer.ngram_lo, c.featurizer.ngram_hi);
    EXPECT_TRUE(range == std::make_pair(1, 2) || range == std::make_pair(1, 3) ||
                range == std::make_pair(2, 3));
    EXPECT_EQ(c.featurizer.hash_dim, base.featurizer.hash_dim);
  }
}

TEST(Search, LogUniformTolPassesKsAgainstUniform) {
  const SearchSpace space;
  std::vector<double> u;
  for (std::size_t i = 0; i < 10000; ++i) {
    const double tol = sample_trial(space, TrainConfig{}, 99, i).tol;
    u.push_back((std::log(tol) - std::log(1e-4)) / (std::log(1e-2) - std::log(1e-4)));
  }
  // Reference sample: an evenly spaced grid over [0, 1].
  std::vector<double> grid;
  for (int i = 0; i < 10000; ++i) grid.push_back((i + 0.5) / 10000.0);
  const auto ks = ks_two_sample(u, grid);
  EXPECT_GT(ks.p_value, 0.01) << "D = " << ks.d_stat;
}

TEST(Search, OneTrialIsBestAndSeedReproducible) {
  auto train_docs = separable_corpus(60, 7);
  auto val_docs = separable_corpus(20, 8);
  TrainConfig base = small_config();
  const auto one = random_search(SearchSpace{}, 1, train_docs, val_docs, 3, base);
  EXPECT_EQ(one.best_index, 0u);
  ASSERT_EQ(one.trials.size(), 1u);

  const auto a = random_search(SearchSpace{}, 6, train_docs, val_docs, 11, base, 1);
  const auto b = random_search(SearchSpace{}, 6, train_docs, val_docs, 11, base, 2);
  EXPECT_EQ(a.best_index, b.best_index);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].config, b.trials[i].config);
    EXPECT_EQ(a.trials[i].val_f1, b.trials[i].val_f1);
  }
  EXPECT_EQ(a.best.weights(), b.best.weights());
  for (const auto& t : a.trials)
    if (t.ok) {
      EXPECT_LE(t.val_f1, a.trials[a.best_index].val_f1);
    }
  EXPECT_THROW(random_search(SearchSpace{}, 0, train_docs, val_docs, 1, base), ConfigError);
}

TEST(Search, FailedTrialsAreLoggedAndSkipped) {
  SearchSpace space;
  space.c_lo = 0.0;
  space.c_hi = 0.0;  // every draw is C = 0, which is invalid
  const auto docs = separable_corpus(20, 9);
  EXPECT_THROW(random_search(space, 3, docs, docs, 1, small_config()), Error);

  std::ostringstream log;
  std::vector<TrialResult> trials(2);
  trials[0].config = small_config();
  trials[0].ok = true;
  trials[0].val_f1 = 0.75;
  trials[1].index = 1;
  trials[1].error = "C must be a positive finite number";
  write_trial_log(log, trials, 42);
  const auto text = log.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "trial,regularization,C,tol,ngram_lo,ngram_hi,random_state,remove_stopwords,val_f1,"
            "wall_seconds,status,search_seed");
  EXPECT_NE(text.find("failed: C must be"), std::string::npos);
  EXPECT_NE(text.find(",ok,42"), std::string::npos);
}
