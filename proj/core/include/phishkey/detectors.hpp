#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>

#include "phishkey/cape.hpp"
#include "phishkey/forest.hpp"
#include "phishkey/harness.hpp"
#include "phishkey/pipeline.hpp"

namespace phishkey {

/// HTML classifier that reads only the first `words` whitespace-delimited
/// words of a page: tokens of that prefix, bag of words, random forest. This
/// is the positional cropping CAPE replaces, kept as a comparison point.
struct CropModel {
  std::size_t words = kInjectionWords;
  Vocabulary vocabulary;
  ForestModel forest;

  double html_proba(std::string_view html) const;
};

CropModel train_crop(const Corpus& train, std::size_t words, std::size_t vocab_cap,
                     const ForestParams& forest);

struct DetectorOptions {
  PipelineConfig pipeline;
  /// Also train the cropping baseline (methods crop_rf and crop_hybrid).
  bool crop_baseline = true;
  std::size_t crop_words = kInjectionWords;
  /// Receives each fold's training report, if set.
  std::function<void(const TrainReport&)> on_trained;
};

/// Trains PhishKey per fold. Methods, in order: phishkey (fused vote),
/// url_cnn, cape_rf, then crop_rf and crop_hybrid (url net fused with the
/// cropped forest, weights fitted on validation) when enabled.
DetectorFactory phishkey_factory(DetectorOptions options);

}  // namespace phishkey
