#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phishkey/corpus.hpp"

namespace phishkey {

/// Binary confusion matrix with phishing as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(Label truth, Label predicted);
};

Confusion confusion_from(std::span<const Label> truth, std::span<const Label> predicted);
Confusion confusion_from_proba(std::span<const Label> truth, std::span<const double> p_phishing,
                               double threshold = 0.5);

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision and recall are 0 when undefined; F1 = 2PR/(P+R), 0 if P+R = 0.
Metrics compute_metrics(const Confusion& c);

struct MetricSummary {
  Metrics mean;
  /// Population standard deviation across folds.
  Metrics stddev;
};

MetricSummary summarize(std::span<const Metrics> folds);

}  // namespace phishkey
