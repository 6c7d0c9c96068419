#include "phishkey/ensemble.hpp"

#include <cmath>
#include <string>

#include "phishkey/error.hpp"
#include "phishkey/metrics.hpp"

namespace phishkey {

void VoteWeights::validate() const {
  const bool in_range = w_url >= 0.0 && w_url <= 1.0 && w_html >= 0.0 && w_html <= 1.0;
  if (!in_range || std::abs(w_url + w_html - 1.0) > 1e-6) {
    throw ConfigError("vote weights (" + std::to_string(w_url) + ", " + std::to_string(w_html) +
                      ") are not a convex combination");
  }
}

Vote soft_vote(double p_url, double p_html, const VoteWeights& w) {
  w.validate();
  Vote v;
  v.p_final = w.w_url * p_url + w.w_html * p_html;
  v.label = v.p_final >= 0.5 ? Label::Phishing : Label::Legitimate;
  return v;
}

VoteWeights fit_weights(std::span<const double> val_p_url, std::span<const double> val_p_html,
                        std::span<const Label> val_labels, double grid_step) {
  if (val_labels.empty()) throw DataError("fit_weights: empty validation set");
  if (val_p_url.size() != val_labels.size() || val_p_html.size() != val_labels.size()) {
    throw DataError("fit_weights: prediction and label lists differ in length");
  }
  const double inverse = 1.0 / grid_step;
  const auto steps = static_cast<int>(std::lround(inverse));
  if (!(grid_step > 0.0) || steps < 2 || steps % 2 != 0 || std::abs(inverse - steps) > 1e-9) {
    throw ConfigError("grid step " + std::to_string(grid_step) +
                      " must divide 1 into an even number of intervals");
  }
  const int centre = steps / 2;
  int best_step = -1;
  double best_f1 = -1.0;
  for (int step = 0; step <= steps; ++step) {
    const VoteWeights w = VoteWeights::from_url_weight(static_cast<double>(step) / steps);
    Confusion c;
    for (std::size_t i = 0; i < val_labels.size(); ++i) {
      c.add(val_labels[i], soft_vote(val_p_url[i], val_p_html[i], w).label);
    }
    const double f1 = compute_metrics(c).f1;
    // Ascending scan keeps the smaller w_url on ties; the centre wins any tie.
    if (f1 > best_f1 || (f1 == best_f1 && step == centre)) {
      best_f1 = f1;
      best_step = step;
    }
  }
  return VoteWeights::from_url_weight(static_cast<double>(best_step) / steps);
}

}  // namespace phishkey
