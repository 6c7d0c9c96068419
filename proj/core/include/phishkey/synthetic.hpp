#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "phishkey/corpus.hpp"

namespace phishkey {

/// Knobs for the synthetic web-page generator. Pages are HTML documents whose
/// visible text mixes a shared pseudo-word pool, per-class pseudo-word pools
/// and a small list of English words with a class lean. The pseudo-word
/// lexicons depend on `dialect`, so two corpora with different dialects share
/// only markup and the English words, like two independently scraped datasets.
struct SyntheticOptions {
  std::size_t samples = 2000;
  double phishing_fraction = 0.5;
  std::uint64_t seed = 1;
  std::uint64_t dialect = 0;
  /// Visible text words per page, drawn uniformly.
  std::size_t min_words = 100;
  std::size_t max_words = 400;
  /// Share of text words taken from the English class lists.
  double english_rate = 0.03;
  /// Share of text words taken from a class pool (the rest are shared words).
  double class_rate = 0.35;
  /// Probability that a class-flavoured word comes from the page's own class.
  double purity = 0.75;
  /// Probability that a URL is drawn in its own class's style.
  double url_signal = 0.75;
  std::string provenance = "synthetic";
};

Corpus generate_corpus(const SyntheticOptions& options);

/// Long pages (more than 2000 whitespace words each) in a different dialect,
/// suitable as injection donors for a corpus made with default options.
SyntheticOptions donor_options(std::uint64_t seed, std::size_t samples = 200);

}  // namespace phishkey
