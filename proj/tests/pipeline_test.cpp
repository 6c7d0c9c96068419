#include <gtest/gtest.h>

#include "phishkey/detectors.hpp"
#include "phishkey/harness.hpp"
#include "phishkey/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace phishkey;

TEST(Pipeline, TrainsAndFusesBetterThanChance) {
  const Corpus c = fixtures::small_corpus(400, 8);
  const SplitCorpora s = materialize(c, make_splits(c, 2));
  TrainReport report;
  PipelineConfig config = fixtures::small_config(4);
  config.embeddings.epochs = 3;
  const PhishKeyModel m = train_phishkey(s.train, s.validation, config, &report);
  EXPECT_GE(report.val_f1_fused, report.val_f1_url);
  EXPECT_GE(report.val_f1_fused, report.val_f1_html);
  EXPECT_NEAR(m.weights.w_url + m.weights.w_html, 1.0, 1e-12);

  const PhishKeyClassifier classifier(m);
  std::vector<Label> truth;
  std::vector<double> p;
  for (const Sample& t : s.test.samples()) {
    const Prediction pr = classifier.predict(t);
    EXPECT_NEAR(pr.vote.p_final, m.weights.w_url * pr.p_url + m.weights.w_html * pr.p_html, 1e-12);
    truth.push_back(t.label);
    p.push_back(pr.vote.p_final);
  }
  // Tiny model on short pages; the full-size quality bar lives in the acceptance run.
  EXPECT_GT(oracle::f1_at(p, truth), 0.6);
}

TEST(Pipeline, FactoryReportsEveryMethod) {
  const Corpus c = fixtures::small_corpus(200, 9);
  DetectorOptions o;
  o.pipeline = fixtures::small_config(5);
  o.crop_words = 100;
  const SplitCorpora s = materialize(c, make_splits(c, 3));
  const auto detector = phishkey_factory(o)(s.train, s.validation);
  const std::vector<std::string> expected = {"phishkey", "url_cnn", "cape_rf", "crop_rf", "crop_hybrid"};
  EXPECT_EQ(detector->methods(), expected);
  for (double v : detector->score(s.test[0])) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
