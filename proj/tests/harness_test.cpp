#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "phishkey/error.hpp"
#include "phishkey/harness.hpp"
#include "phishkey/html_tokenizer.hpp"

using namespace phishkey;

namespace {

Corpus labelled(std::size_t phishing, std::size_t legitimate, std::string provenance = "t") {
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < phishing + legitimate; ++i) {
    const bool p = i < phishing;
    samples.push_back({"s" + std::to_string(i), "http://x/" + std::to_string(i), "<p>w" + std::to_string(i) + "</p>",
                       p ? Label::Phishing : Label::Legitimate});
  }
  return Corpus(std::move(samples), std::move(provenance));
}

std::size_t count_label(const Corpus& c, const std::vector<std::string>& ids, Label label) {
  std::size_t n = 0;
  for (const auto& id : ids) n += c[*c.find(id)].label == label;
  return n;
}

bool is_subset(std::vector<std::string> small, std::vector<std::string> big) {
  std::sort(small.begin(), small.end());
  std::sort(big.begin(), big.end());
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::string words(std::size_t n, const std::string& stem) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
  return s;
}

}  // namespace

TEST(Splits, SizesAndStratification) {
  const Corpus c = labelled(500, 500);
  const SplitPlan p = make_splits(c, 1);
  EXPECT_EQ(p.train_ids.size(), 640u);
  EXPECT_EQ(p.val_ids.size(), 160u);
  EXPECT_EQ(p.test_ids.size(), 200u);
  EXPECT_EQ(count_label(c, p.test_ids, Label::Phishing), 100u);
  EXPECT_EQ(count_label(c, p.val_ids, Label::Phishing), 80u);

  std::set<std::string> all(p.train_ids.begin(), p.train_ids.end());
  all.insert(p.val_ids.begin(), p.val_ids.end());
  all.insert(p.test_ids.begin(), p.test_ids.end());
  EXPECT_EQ(all.size(), 1000u);
}

TEST(Splits, UnevenClassesStayWithinOneOfTheirShare) {
  const Corpus c = labelled(301, 96);
  const SplitPlan p = make_splits(c, 4);
  const double share = 301.0 / 397.0;
  for (const auto* ids : {&p.train_ids, &p.val_ids, &p.test_ids}) {
    EXPECT_NEAR(static_cast<double>(count_label(c, *ids, Label::Phishing)), share * ids->size(), 1.0);
  }
  EXPECT_EQ(p.train_ids.size() + p.val_ids.size() + p.test_ids.size(), 397u);
}

TEST(Splits, DeterministicPerSeed) {
  const Corpus c = labelled(50, 50);
  const SplitPlan a = make_splits(c, 9), b = make_splits(c, 9), d = make_splits(c, 10);
  EXPECT_EQ(a.test_ids, b.test_ids);
  EXPECT_EQ(a.train_ids, b.train_ids);
  EXPECT_NE(a.test_ids, d.test_ids);
}

TEST(Splits, TinyClassThrows) {
  EXPECT_THROW(make_splits(labelled(2, 50), 1), DataError);
}

TEST(Reduction, HalfOfALargeTrainingSet) {
  // 43,806 samples: 80% of which (35,045) is split 28,036 / 7,009.
  const Corpus c = labelled(21903, 21903);
  const SplitPlan p = make_splits(c, 1);
  EXPECT_EQ(p.train_ids.size(), 28036u);
  const SplitPlan half = reduce_training(c, p, 0.5, 1);
  EXPECT_EQ(half.train_ids.size(), 14018u);
  EXPECT_EQ(half.test_ids, p.test_ids);
}

TEST(Reduction, NestedAndTestUntouched) {
  const Corpus c = labelled(300, 200);
  const SplitPlan p = make_splits(c, 2);
  SplitPlan previous = p;
  for (double f : kReductionFractions) {
    const SplitPlan r = reduce_training(c, p, f, 5);
    EXPECT_EQ(r.test_ids, p.test_ids);
    EXPECT_TRUE(is_subset(r.train_ids, previous.train_ids)) << f;
    EXPECT_TRUE(is_subset(r.val_ids, previous.val_ids)) << f;
    EXPECT_NEAR(static_cast<double>(r.train_ids.size()), f * p.train_ids.size(), 1.0);
    EXPECT_GT(count_label(c, r.train_ids, Label::Legitimate), 0u);
    previous = r;
  }
  EXPECT_THROW(reduce_training(labelled(8, 8), make_splits(labelled(8, 8), 1), 0.01, 1), DataError);
}

TEST(Folds, DisjointCoveringAndBalanced) {
  const Corpus c = labelled(103, 97);
  const auto folds = make_folds(c, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::multiset<std::string> tested;
  for (const SplitPlan& f : folds) {
    tested.insert(f.test_ids.begin(), f.test_ids.end());
    EXPECT_NEAR(static_cast<double>(f.test_ids.size()), 40.0, 1.0);
    std::set<std::string> inside(f.train_ids.begin(), f.train_ids.end());
    inside.insert(f.val_ids.begin(), f.val_ids.end());
    for (const auto& id : f.test_ids) EXPECT_FALSE(inside.count(id));
    EXPECT_EQ(inside.size() + f.test_ids.size(), 200u);
  }
  EXPECT_EQ(tested.size(), 200u);
  EXPECT_EQ(std::set<std::string>(tested.begin(), tested.end()).size(), 200u);
}

TEST(Injection, FirstWordsIsAVerbatimPrefix) {
  EXPECT_EQ(first_words("  a\tb\n\nc d", 2), "  a\tb");
  EXPECT_EQ(first_words("a b", 5), "a b");
  EXPECT_EQ(first_words("", 3), "");
  EXPECT_EQ(split_words(" x  y\tz\n").size(), 3u);
}

TEST(Injection, PrependsDonorWords) {
  const Sample victim{"v", "http://v", "<p>victim text</p>", Label::Phishing};
  const Sample donor{"d", "http://d", words(2500, "dw"), Label::Legitimate};
  const Sample out = inject_attack(victim, donor, 2000);
  EXPECT_EQ(out.url, victim.url);
  EXPECT_EQ(out.id, victim.id);
  EXPECT_EQ(out.label, victim.label);
  EXPECT_EQ(out.html, words(2000, "dw") + "\n" + victim.html);

  const Sample short_donor{"d", "http://d", words(500, "dw"), Label::Legitimate};
  EXPECT_EQ(split_words(inject_attack(victim, short_donor, 2000).html).size(), 502u);

  EXPECT_THROW(inject_attack(victim, Sample{"d", "u", "x", Label::Phishing}), DataError);
  EXPECT_THROW(inject_attack(victim, Sample{"d", "u", " ", Label::Legitimate}), DataError);
}

TEST(Injection, CropWindowSeesOnlyDonorContent) {
  const Sample victim{"v", "http://v", "<p>victimword</p>", Label::Phishing};
  const Sample donor{"d", "http://d", words(2500, "dw"), Label::Legitimate};
  const auto window = tokenize(first_words(inject_attack(victim, donor).html, kInjectionWords));
  EXPECT_EQ(window.size(), 2000u);
  EXPECT_EQ(std::count(window.begin(), window.end(), "victimword"), 0);
}

TEST(Injection, CorpusPicksOppositeClassDonors) {
  const Corpus victims = labelled(10, 10, "victims");
  std::vector<Sample> d;
  d.push_back({"p", "http://p", words(30, "phw"), Label::Phishing});
  d.push_back({"l", "http://l", words(30, "lgw"), Label::Legitimate});
  const Corpus donors(std::move(d), "donors");
  const auto out = inject_corpus(victims, donors, 1);
  ASSERT_EQ(out.size(), 20u);
  for (const Sample& s : out) {
    EXPECT_EQ(s.html.rfind(is_phishing(s.label) ? "lgw0" : "phw0", 0), 0u) << s.id;
  }
  EXPECT_THROW(inject_corpus(victims, victims, 1), DataError);
}

TEST(Experiment, LabelOracleScoresPerfectly) {
  const Corpus c = labelled(60, 40);
  const auto reports = run_cv(c, label_oracle_factory(), 5, 1);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].folds.size(), 5u);
  EXPECT_EQ(reports[0].summary.mean.f1, 1.0);
  EXPECT_EQ(reports[0].summary.stddev.f1, 0.0);
}

TEST(Experiment, ReductionRowsAndCsv) {
  const Corpus c = labelled(100, 100);
  ExperimentOptions o;
  o.folds = 2;
  o.fractions = {1.0, 0.5};
  const auto rows = run_experiment(c, label_oracle_factory(), o);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].test_n, rows[2].test_n);
  EXPECT_LT(rows[2].train_n, rows[0].train_n);
  std::ostringstream csv;
  write_results_csv(rows, csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  std::ostringstream again;
  write_results_csv(run_experiment(c, label_oracle_factory(), o), again);
  EXPECT_EQ(csv.str(), again.str());
}

TEST(Experiment, InjectionConditionUsesDonorProvenance) {
  const Corpus c = labelled(20, 20);
  std::vector<Sample> d;
  d.push_back({"p", "http://p", words(30, "phw"), Label::Phishing});
  d.push_back({"l", "http://l", words(30, "lgw"), Label::Legitimate});
  const Corpus donors(std::move(d), "elsewhere");
  ExperimentOptions o;
  o.folds = 2;
  o.donors = &donors;
  const auto reports = summarize_rows(run_experiment(c, label_oracle_factory(), o));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].injection, "none");
  EXPECT_EQ(reports[1].injection, "elsewhere");
}

TEST(Experiment, FoldErrorsNameTheFold) {
  const Corpus c = labelled(20, 20);
  const DetectorFactory broken = [](const Corpus&, const Corpus&) -> std::unique_ptr<Detector> {
    throw DataError("boom");
  };
  try {
    run_cv(c, broken, 2, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fold 0"), std::string::npos) << e.what();
  }
}
