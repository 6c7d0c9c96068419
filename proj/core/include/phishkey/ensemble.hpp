#pragma once

#include <span>

#include "phishkey/corpus.hpp"

namespace phishkey {

/// Convex soft-voting weights: w_url + w_html = 1.
struct VoteWeights {
  double w_url = 0.5;
  double w_html = 0.5;

  /// Throws ConfigError unless both are in [0, 1] and sum to 1 (within 1e-6).
  void validate() const;
  static VoteWeights from_url_weight(double w_url) { return {w_url, 1.0 - w_url}; }
};

struct Vote {
  double p_final = 0.0;
  Label label = Label::Legitimate;
};

/// p_final = w_url * p_url + w_html * p_html; phishing iff p_final >= 0.5.
Vote soft_vote(double p_url, double p_html, const VoteWeights& w);

inline constexpr double kDefaultGridStep = 0.05;

/// Grid search over w_url in {0, step, ..., 1} maximizing validation F1.
/// Ties prefer w_url = 0.5, then the smaller w_url. 1/step must be an even
/// whole number so that 0, 0.5 and 1 are grid points. Throws DataError on an
/// empty or misaligned validation set.
VoteWeights fit_weights(std::span<const double> val_p_url, std::span<const double> val_p_html,
                        std::span<const Label> val_labels, double grid_step = kDefaultGridStep);

}  // namespace phishkey
