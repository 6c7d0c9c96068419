#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "phishkey/corpus.hpp"
#include "phishkey/metrics.hpp"
#include "phishkey/random.hpp"

namespace phishkey {

inline constexpr double kTestFraction = 0.20;
/// Share of the train+validation pool carved out for validation (64/16/20 overall).
inline constexpr double kValidationFraction = 0.20;
inline constexpr std::array<double, 5> kReductionFractions = {1.0, 0.5, 0.25, 0.10, 0.05};
inline constexpr std::size_t kInjectionWords = 2000;

struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

/// Stratified 80/20 (train+val)/test, then 20% of train+val as validation.
/// Per-class quotas use largest-remainder rounding of the rounded totals.
/// Throws DataError if a class is too small to appear in every split.
SplitPlan make_splits(const Corpus& corpus, std::uint64_t seed);

/// Stratified k-fold: fold i is the test set of plan i, the rest is split
/// 80/20 into train and validation.
std::vector<SplitPlan> make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

/// Subsamples train and validation (stratified) to `fraction` of their size;
/// test ids are returned untouched. Smaller fractions of the same seed are
/// subsets of larger ones. Throws DataError if a class would vanish.
SplitPlan reduce_training(const Corpus& corpus, const SplitPlan& plan, double fraction,
                          std::uint64_t seed);

struct SplitCorpora {
  Corpus train;
  Corpus validation;
  Corpus test;
};

SplitCorpora materialize(const Corpus& corpus, const SplitPlan& plan);

/// Verbatim prefix of `text` ending after its n-th whitespace-delimited word.
std::string_view first_words(std::string_view text, std::size_t n);

std::vector<std::string_view> split_words(std::string_view text);

/// Prepends the first `n_words` whitespace-delimited words of the donor's
/// HTML (all of them if it has fewer) to the victim's HTML. URL, id and label
/// are unchanged. Throws DataError if the donor has the same label or no words.
Sample inject_attack(const Sample& victim, const Sample& donor, std::size_t n_words = kInjectionWords);

/// Picks, for every victim, a random donor of the opposite class and injects
/// it. Donors must come from a corpus with a different provenance.
std::vector<Sample> inject_corpus(const Corpus& victims, const Corpus& donors, std::uint64_t seed,
                                  std::size_t n_words = kInjectionWords);

/// A trained system under evaluation. Each method is one classifier whose
/// phishing probability is reported per sample.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<std::string> methods() const = 0;
  /// One phishing probability per entry of methods().
  virtual std::vector<double> score(const Sample& sample) const = 0;
};

using DetectorFactory =
    std::function<std::unique_ptr<Detector>(const Corpus& train, const Corpus& validation)>;

/// Diagnostic detector that answers with the true label. Useful for checking
/// the harness itself.
DetectorFactory label_oracle_factory();

struct ExperimentOptions {
  std::string dataset = "dataset";
  std::size_t folds = 5;
  std::vector<double> fractions = {1.0};
  std::uint64_t seed = 1;
  /// When set, every fold is also evaluated on injected test samples.
  const Corpus* donors = nullptr;
  std::size_t injection_words = kInjectionWords;
  std::function<void(std::string_view)> progress;
};

struct ResultRow {
  std::string dataset;
  std::string injection;  // "none" or the donor corpus provenance
  std::string method;
  double reduction = 1.0;
  std::size_t fold = 0;
  std::size_t train_n = 0;
  std::size_t val_n = 0;
  std::size_t test_n = 0;
  Metrics metrics;
};

/// k-fold cross-validation over every requested reduction fraction. All
/// fitting happens inside the fold's training and validation data. Errors
/// inside a fold are rethrown with the fold index prepended.
std::vector<ResultRow> run_experiment(const Corpus& corpus, const DetectorFactory& factory,
                                      const ExperimentOptions& options);

struct MethodReport {
  std::string dataset;
  std::string injection;
  std::string method;
  double reduction = 1.0;
  double train_n = 0.0;  // mean over folds
  double val_n = 0.0;
  double test_n = 0.0;
  std::vector<Metrics> folds;
  MetricSummary summary;
};

/// Groups rows by (dataset, injection, method, reduction), in first-seen order.
std::vector<MethodReport> summarize_rows(const std::vector<ResultRow>& rows);

/// Plain k-fold evaluation at full training size.
std::vector<MethodReport> run_cv(const Corpus& corpus, const DetectorFactory& factory, std::size_t k,
                                 std::uint64_t seed, std::string dataset = "dataset");

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<MethodReport>& reports, std::ostream& out);

}  // namespace phishkey
