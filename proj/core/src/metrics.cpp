#include "phishkey/metrics.hpp"

#include <cmath>

#include "phishkey/error.hpp"

namespace phishkey {

void Confusion::add(Label truth, Label predicted) {
  const bool t = is_phishing(truth);
  const bool p = is_phishing(predicted);
  if (t && p) {
    ++tp;
  } else if (!t && p) {
    ++fp;
  } else if (t && !p) {
    ++fn;
  } else {
    ++tn;
  }
}

Confusion confusion_from(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw DataError("confusion: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) c.add(truth[i], predicted[i]);
  return c;
}

Confusion confusion_from_proba(std::span<const Label> truth, std::span<const double> p_phishing,
                               double threshold) {
  if (truth.size() != p_phishing.size()) throw DataError("confusion: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    c.add(truth[i], p_phishing[i] >= threshold ? Label::Phishing : Label::Legitimate);
  }
  return c;
}

Metrics compute_metrics(const Confusion& c) {
  Metrics m;
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn);
  const auto tn = static_cast<double>(c.tn);
  const double n = tp + fp + fn + tn;
  m.accuracy = n > 0 ? (tp + tn) / n : 0.0;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

MetricSummary summarize(std::span<const Metrics> folds) {
  MetricSummary s;
  if (folds.empty()) return s;
  const auto n = static_cast<double>(folds.size());
  auto field = [&](double Metrics::*member, double Metrics::*out_member) {
    double mean = 0.0;
    for (const Metrics& m : folds) mean += m.*member;
    mean /= n;
    double var = 0.0;
    for (const Metrics& m : folds) var += (m.*member - mean) * (m.*member - mean);
    s.mean.*out_member = mean;
    s.stddev.*out_member = std::sqrt(var / n);
  };
  field(&Metrics::accuracy, &Metrics::accuracy);
  field(&Metrics::f1, &Metrics::f1);
  field(&Metrics::precision, &Metrics::precision);
  field(&Metrics::recall, &Metrics::recall);
  return s;
}

}  // namespace phishkey
