#include "phishkey/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "phishkey/error.hpp"

namespace phishkey {
namespace {

using ClassIndices = std::array<std::vector<std::size_t>, 2>;

ClassIndices by_class(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  ClassIndices out;
  for (std::size_t i : indices) out[static_cast<std::size_t>(corpus[i].label)].push_back(i);
  return out;
}

std::vector<std::size_t> all_indices(const Corpus& corpus) {
  std::vector<std::size_t> idx(corpus.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// Splits `total` across classes proportionally to `sizes`, largest remainder
// first (ties to the lower class index).
std::array<std::size_t, 2> allocate(const std::array<std::size_t, 2>& sizes, std::size_t total) {
  const std::size_t n = sizes[0] + sizes[1];
  std::array<std::size_t, 2> quota{0, 0};
  if (n == 0) return quota;
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double exact = static_cast<double>(sizes[c]) * static_cast<double>(total) / static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  while (assigned < total) {
    const std::size_t c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }
  return quota;
}

std::size_t rounded_share(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

std::vector<std::string> ids_of(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (std::size_t i : indices) ids.push_back(corpus[i].id);
  return ids;
}

// Stratified split of `pool` into (held, rest) with |held| = round(fraction * |pool|).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_take(
    const Corpus& corpus, const std::vector<std::size_t>& pool, double fraction, Rng& rng,
    const char* what) {
  ClassIndices classes = by_class(corpus, pool);
  const auto quota = allocate({classes[0].size(), classes[1].size()}, rounded_share(pool.size(), fraction));
  std::vector<std::size_t> held;
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < 2; ++c) {
    if (quota[c] == 0 || quota[c] == classes[c].size()) {
      throw DataError(std::string("class ") + std::string(to_string(static_cast<Label>(c))) + " has " +
                      std::to_string(classes[c].size()) + " samples, too few for the " + what + " split");
    }
    rng.shuffle(classes[c]);
    held.insert(held.end(), classes[c].begin(), classes[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
    rest.insert(rest.end(), classes[c].begin() + static_cast<std::ptrdiff_t>(quota[c]), classes[c].end());
  }
  std::sort(held.begin(), held.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(held), std::move(rest)};
}

std::unordered_map<std::string_view, std::size_t> id_index(const Corpus& corpus) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus[i].id, i);
  return index;
}

std::vector<std::size_t> resolve(const std::unordered_map<std::string_view, std::size_t>& index,
                                 const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("split references unknown sample id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

SplitPlan make_splits(const Corpus& corpus, std::uint64_t seed) {
  Rng rng(seed);
  auto [test, pool] = stratified_take(corpus, all_indices(corpus), kTestFraction, rng, "test");
  auto [val, train] = stratified_take(corpus, pool, kValidationFraction, rng, "validation");
  return SplitPlan{ids_of(corpus, train), ids_of(corpus, val), ids_of(corpus, test), seed};
}

std::vector<SplitPlan> make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  Rng rng(seed);
  ClassIndices classes = by_class(corpus, all_indices(corpus));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    if (classes[c].size() < k) {
      throw DataError(std::string("class ") + std::string(to_string(static_cast<Label>(c))) + " has " +
                      std::to_string(classes[c].size()) + " samples, fewer than " + std::to_string(k) +
                      " folds");
    }
    rng.shuffle(classes[c]);
    for (std::size_t i : classes[c]) folds[next++ % k].push_back(i);
  }
  std::vector<SplitPlan> plans;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> pool;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) pool.insert(pool.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(pool.begin(), pool.end());
    std::sort(folds[f].begin(), folds[f].end());
    Rng fold_rng(Rng::derive(seed, f));
    auto [val, train] = stratified_take(corpus, pool, kValidationFraction, fold_rng, "validation");
    plans.push_back(SplitPlan{ids_of(corpus, train), ids_of(corpus, val), ids_of(corpus, folds[f]), seed});
  }
  return plans;
}

SplitPlan reduce_training(const Corpus& corpus, const SplitPlan& plan, double fraction,
                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("reduction fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  if (fraction == 1.0) return plan;
  const auto index = id_index(corpus);

  auto reduce = [&](const std::vector<std::string>& ids, std::uint64_t stream, const char* what) {
    const std::vector<std::size_t> members = resolve(index, ids);
    ClassIndices classes = by_class(corpus, members);
    const auto quota =
        allocate({classes[0].size(), classes[1].size()}, rounded_share(members.size(), fraction));
    // The permutation ignores `fraction`, so smaller reductions nest inside larger ones.
    Rng rng(Rng::derive(seed, stream));
    std::unordered_set<std::size_t> keep;
    for (std::size_t c = 0; c < 2; ++c) {
      if (!classes[c].empty() && quota[c] == 0) {
        throw DataError(std::string("reducing the ") + what + " split to " + std::to_string(fraction) +
                        " leaves class " + std::string(to_string(static_cast<Label>(c))) + " empty");
      }
      std::vector<std::size_t> order = classes[c];
      std::sort(order.begin(), order.end());
      rng.shuffle(order);
      keep.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (keep.count(members[i])) out.push_back(ids[i]);
    }
    return out;
  };

  SplitPlan reduced;
  reduced.train_ids = reduce(plan.train_ids, 0, "training");
  reduced.val_ids = reduce(plan.val_ids, 1, "validation");
  reduced.test_ids = plan.test_ids;
  reduced.seed = plan.seed;
  return reduced;
}

SplitCorpora materialize(const Corpus& corpus, const SplitPlan& plan) {
  const auto index = id_index(corpus);
  return SplitCorpora{corpus.subset(resolve(index, plan.train_ids)),
                      corpus.subset(resolve(index, plan.val_ids)),
                      corpus.subset(resolve(index, plan.test_ids))};
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    if (pos > start) words.push_back(text.substr(start, pos - start));
  }
  return words;
}

std::string_view first_words(std::string_view text, std::size_t n) {
  std::size_t pos = 0;
  std::size_t seen = 0;
  while (pos < text.size() && seen < n) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos == text.size()) break;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    ++seen;
  }
  return text.substr(0, pos);
}

Sample inject_attack(const Sample& victim, const Sample& donor, std::size_t n_words) {
  if (donor.label == victim.label) {
    throw DataError("injection donor '" + donor.id + "' has the same label as victim '" + victim.id + "'");
  }
  const auto words = split_words(donor.html);
  if (words.empty()) throw DataError("injection donor '" + donor.id + "' has empty HTML");
  const std::size_t n = std::min(n_words, words.size());
  std::string injected;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) injected += ' ';
    injected.append(words[i]);
  }
  injected += '\n';
  Sample out = victim;
  out.html = injected + victim.html;
  return out;
}

std::vector<Sample> inject_corpus(const Corpus& victims, const Corpus& donors, std::uint64_t seed,
                                  std::size_t n_words) {
  if (donors.provenance() == victims.provenance()) {
    throw DataError("injection donors must come from a different corpus than the victims (both '" +
                    victims.provenance() + "')");
  }
  ClassIndices pools;
  for (std::size_t i = 0; i < donors.size(); ++i) {
    if (!split_words(donors[i].html).empty()) pools[static_cast<std::size_t>(donors[i].label)].push_back(i);
  }
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(victims.size());
  for (const Sample& victim : victims.samples()) {
    const auto& pool = pools[static_cast<std::size_t>(opposite(victim.label))];
    if (pool.empty()) {
      throw DataError("donor corpus has no usable " + std::string(to_string(opposite(victim.label))) +
                      " samples");
    }
    out.push_back(inject_attack(victim, donors[pool[rng.uniform_index(pool.size())]], n_words));
  }
  return out;
}

namespace {

class LabelOracle : public Detector {
 public:
  std::vector<std::string> methods() const override { return {"label_oracle"}; }
  std::vector<double> score(const Sample& sample) const override {
    return {is_phishing(sample.label) ? 1.0 : 0.0};
  }
};

template <typename E>
[[noreturn]] void rethrow_in_fold(const E& e, std::size_t fold) {
  throw E("fold " + std::to_string(fold) + ": " + e.what());
}

}  // namespace

DetectorFactory label_oracle_factory() {
  return [](const Corpus&, const Corpus&) { return std::make_unique<LabelOracle>(); };
}

std::vector<ResultRow> run_experiment(const Corpus& corpus, const DetectorFactory& factory,
                                      const ExperimentOptions& options) {
  if (options.fractions.empty()) throw ConfigError("no reduction fractions requested");
  const std::vector<SplitPlan> folds = make_folds(corpus, options.folds, options.seed);
  std::vector<ResultRow> rows;

  for (double fraction : options.fractions) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      try {
        const SplitPlan plan = reduce_training(corpus, folds[f], fraction, Rng::derive(options.seed, 100 + f));
        const SplitCorpora split = materialize(corpus, plan);
        if (options.progress) {
          char msg[128];
          std::snprintf(msg, sizeof msg, "reduction %.2f fold %zu: train %zu, val %zu, test %zu", fraction, f,
                        split.train.size(), split.validation.size(), split.test.size());
          options.progress(msg);
        }
        const std::unique_ptr<Detector> detector = factory(split.train, split.validation);
        const std::vector<std::string> methods = detector->methods();

        struct Condition {
          std::string name;
          std::vector<Sample> samples;
        };
        std::vector<Condition> conditions;
        conditions.push_back({"none", split.test.samples()});
        if (options.donors) {
          conditions.push_back({options.donors->provenance(),
                                inject_corpus(split.test, *options.donors, Rng::derive(options.seed, 1000 + f),
                                              options.injection_words)});
        }

        for (const Condition& condition : conditions) {
          std::vector<Confusion> confusions(methods.size());
          for (const Sample& s : condition.samples) {
            const std::vector<double> p = detector->score(s);
            if (p.size() != methods.size()) throw Error("detector returned the wrong number of scores");
            for (std::size_t m = 0; m < methods.size(); ++m) {
              confusions[m].add(s.label, p[m] >= 0.5 ? Label::Phishing : Label::Legitimate);
            }
          }
          for (std::size_t m = 0; m < methods.size(); ++m) {
            rows.push_back(ResultRow{options.dataset, condition.name, methods[m], fraction, f,
                                     split.train.size(), split.validation.size(), split.test.size(),
                                     compute_metrics(confusions[m])});
          }
        }
      } catch (const DataError& e) {
        rethrow_in_fold(e, f);
      } catch (const ModelError& e) {
        rethrow_in_fold(e, f);
      } catch (const ConfigError& e) {
        rethrow_in_fold(e, f);
      } catch (const Error& e) {
        rethrow_in_fold(e, f);
      }
    }
  }
  return rows;
}

std::vector<MethodReport> summarize_rows(const std::vector<ResultRow>& rows) {
  std::vector<MethodReport> reports;
  std::map<std::tuple<std::string, std::string, std::string, double>, std::size_t> slot;
  for (const ResultRow& row : rows) {
    const auto key = std::make_tuple(row.dataset, row.injection, row.method, row.reduction);
    auto [it, inserted] = slot.emplace(key, reports.size());
    if (inserted) {
      MethodReport r;
      r.dataset = row.dataset;
      r.injection = row.injection;
      r.method = row.method;
      r.reduction = row.reduction;
      reports.push_back(std::move(r));
    }
    MethodReport& r = reports[it->second];
    const auto n = static_cast<double>(r.folds.size());
    r.train_n = (r.train_n * n + static_cast<double>(row.train_n)) / (n + 1.0);
    r.val_n = (r.val_n * n + static_cast<double>(row.val_n)) / (n + 1.0);
    r.test_n = (r.test_n * n + static_cast<double>(row.test_n)) / (n + 1.0);
    r.folds.push_back(row.metrics);
  }
  for (MethodReport& r : reports) r.summary = summarize(r.folds);
  return reports;
}

std::vector<MethodReport> run_cv(const Corpus& corpus, const DetectorFactory& factory, std::size_t k,
                                 std::uint64_t seed, std::string dataset) {
  ExperimentOptions options;
  options.dataset = std::move(dataset);
  options.folds = k;
  options.seed = seed;
  return summarize_rows(run_experiment(corpus, factory, options));
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Quotes a CSV field when it contains a delimiter, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "dataset,injection,method,reduction,fold,train_n,val_n,test_n,accuracy,f1,precision,recall\n";
  for (const ResultRow& r : rows) {
    out << csv_field(r.dataset) << ',' << csv_field(r.injection) << ',' << csv_field(r.method) << ','
        << compact(r.reduction) << ',' << r.fold << ',' << r.train_n << ',' << r.val_n << ',' << r.test_n << ','
        << fixed(r.metrics.accuracy) << ',' << fixed(r.metrics.f1) << ',' << fixed(r.metrics.precision) << ','
        << fixed(r.metrics.recall) << '\n';
  }
}

void write_summary_csv(const std::vector<MethodReport>& reports, std::ostream& out) {
  out << "dataset,injection,method,reduction,train_n,val_n,test_n,folds,accuracy_mean,accuracy_std,"
         "f1_mean,f1_std,precision_mean,precision_std,recall_mean,recall_std\n";
  for (const MethodReport& r : reports) {
    const MetricSummary& s = r.summary;
    out << csv_field(r.dataset) << ',' << csv_field(r.injection) << ',' << csv_field(r.method) << ','
        << compact(r.reduction) << ',' << compact(r.train_n) << ',' << compact(r.val_n) << ','
        << compact(r.test_n) << ',' << r.folds.size() << ',' << fixed(s.mean.accuracy) << ','
        << fixed(s.stddev.accuracy) << ',' << fixed(s.mean.f1) << ',' << fixed(s.stddev.f1) << ','
        << fixed(s.mean.precision) << ',' << fixed(s.stddev.precision) << ',' << fixed(s.mean.recall) << ','
        << fixed(s.stddev.recall) << '\n';
  }
}

}  // namespace phishkey
