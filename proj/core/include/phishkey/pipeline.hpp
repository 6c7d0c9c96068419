#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "phishkey/cape.hpp"
#include "phishkey/corpus.hpp"
#include "phishkey/embeddings.hpp"
#include "phishkey/ensemble.hpp"
#include "phishkey/forest.hpp"
#include "phishkey/urlnet.hpp"

namespace phishkey {

struct CapeParams {
  std::size_t m = kDefaultSelectionSize;
  std::size_t vocab_cap = kDefaultVocabularyCap;
  CentroidOptions centroids;
};

struct PipelineConfig {
  EmbeddingParams embeddings;
  CapeParams cape;
  ForestParams forest;
  UrlNetParams urlnet;
  double grid_step = 0.05;
};

/// Everything needed to classify a page; this is what a model bundle holds.
struct PhishKeyModel {
  EmbeddingModel embeddings;
  ClassCentroids centroids;
  std::size_t m = kDefaultSelectionSize;
  Vocabulary vocabulary;
  ForestModel forest;
  UrlNetModel urlnet;
  VoteWeights weights;
};

struct Prediction {
  double p_url = 0.0;
  double p_html = 0.0;
  Vote vote;
};

/// Inference over a trained model. Holds a reference; the model must outlive it.
class PhishKeyClassifier {
 public:
  explicit PhishKeyClassifier(const PhishKeyModel& model);

  double url_proba(std::string_view url) const;
  double html_proba(const TokenStream& stream) const;
  SelectionResult select(const TokenStream& stream) const { return selector_.select(stream, model_->m); }
  BowVector features(const TokenStream& stream) const;

  Prediction predict(std::string_view url, std::string_view html) const;
  Prediction predict(const Sample& sample) const { return predict(sample.url, sample.html); }

  const PhishKeyModel& model() const { return *model_; }

 private:
  const PhishKeyModel* model_;
  KeyComponentSelector selector_;
};

struct TrainReport {
  EmbeddingTrainingLog embedding_log;
  std::vector<double> urlnet_epoch_loss;
  std::vector<std::string> warnings;
  /// Validation F1 of each branch alone and of the fitted vote.
  double val_f1_url = 0.0;
  double val_f1_html = 0.0;
  double val_f1_fused = 0.0;
};

/// Fits every component on `train` (embeddings, centroids, vocabulary,
/// forest, url model) and the vote weights on `validation`.
PhishKeyModel train_phishkey(const Corpus& train, const Corpus& validation,
                             const PipelineConfig& config, TrainReport* report = nullptr);

}  // namespace phishkey
