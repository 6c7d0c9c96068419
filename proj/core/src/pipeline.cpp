#include "phishkey/pipeline.hpp"

#include "phishkey/error.hpp"
#include "phishkey/metrics.hpp"

namespace phishkey {
namespace {

std::vector<double> round_to_float(std::vector<double> v) {
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  return v;
}

std::vector<Label> labels_of(const Corpus& corpus) {
  std::vector<Label> labels;
  labels.reserve(corpus.size());
  for (const Sample& s : corpus.samples()) labels.push_back(s.label);
  return labels;
}

}  // namespace

PhishKeyClassifier::PhishKeyClassifier(const PhishKeyModel& model)
    : model_(&model), selector_(model.embeddings, model.centroids) {
  if (model.urlnet.shape().vocab != Charset::ascii_printable().size()) {
    throw ModelError("url model charset size does not match the printable-ASCII charset");
  }
  if (model.forest.n_features() != model.vocabulary.size()) {
    throw ModelError("forest feature count does not match the vocabulary size");
  }
  model.weights.validate();
}

double PhishKeyClassifier::url_proba(std::string_view url) const {
  const auto& shape = model_->urlnet.shape();
  return model_->urlnet.predict_proba(encode_url(url, Charset::ascii_printable(), shape.length));
}

BowVector PhishKeyClassifier::features(const TokenStream& stream) const {
  return to_bow(select(stream), model_->vocabulary);
}

double PhishKeyClassifier::html_proba(const TokenStream& stream) const {
  return model_->forest.predict_proba(features(stream));
}

Prediction PhishKeyClassifier::predict(std::string_view url, std::string_view html) const {
  Prediction p;
  p.p_url = url_proba(url);
  p.p_html = html_proba(TokenStream{{}, tokenize(html)});
  p.vote = soft_vote(p.p_url, p.p_html, model_->weights);
  return p;
}

PhishKeyModel train_phishkey(const Corpus& train, const Corpus& validation,
                             const PipelineConfig& config, TrainReport* report) {
  if (train.empty()) throw DataError("empty training split");
  const std::vector<Label> train_labels = labels_of(train);

  std::vector<TokenStream> streams;
  streams.reserve(train.size());
  for (const Sample& s : train.samples()) streams.push_back(tokenize_sample(s));

  PhishKeyModel model;
  model.m = config.cape.m;
  model.embeddings = train_embeddings(streams, config.embeddings,
                                      report ? &report->embedding_log : nullptr);

  // Centroids are stored at float precision, so round before they are used
  // to select training tokens; inference then sees exactly the same values.
  ClassCentroids centroids =
      centroids_from_streams(streams, train_labels, model.embeddings, config.cape.centroids);
  centroids.phishing = round_to_float(std::move(centroids.phishing));
  centroids.legitimate = round_to_float(std::move(centroids.legitimate));
  model.centroids = std::move(centroids);

  const KeyComponentSelector selector(model.embeddings, model.centroids);
  std::vector<SelectionResult> selections;
  selections.reserve(streams.size());
  for (const TokenStream& stream : streams) selections.push_back(selector.select(stream, config.cape.m));
  model.vocabulary = build_vocabulary(selections, config.cape.vocab_cap);
  if (model.vocabulary.empty()) throw DataError("CAPE vocabulary is empty");

  std::vector<BowVector> rows;
  rows.reserve(selections.size());
  for (const SelectionResult& sel : selections) rows.push_back(to_bow(sel, model.vocabulary));
  model.forest = train_forest(rows, train_labels, config.forest);

  std::vector<UrlEncoding> encodings;
  encodings.reserve(train.size());
  for (const Sample& s : train.samples()) {
    encodings.push_back(encode_url(s.url, Charset::ascii_printable(), config.urlnet.shape.length));
  }
  UrlNetParams url_params = config.urlnet;
  url_params.shape.vocab = Charset::ascii_printable().size();
  UrlNetTrainResult url = train_urlnet(encodings, train_labels, url_params);
  model.urlnet = std::move(url.model);

  // Branch outputs on the validation split drive the vote weights.
  model.weights = VoteWeights{1.0, 0.0};
  const PhishKeyClassifier partial(model);
  const std::vector<Label> val_labels = labels_of(validation);
  std::vector<double> p_url;
  std::vector<double> p_html;
  for (const Sample& s : validation.samples()) {
    p_url.push_back(partial.url_proba(s.url));
    p_html.push_back(partial.html_proba(tokenize_sample(s)));
  }
  const VoteWeights fitted = fit_weights(p_url, p_html, val_labels, config.grid_step);
  const auto w_url = static_cast<float>(fitted.w_url);
  model.weights = VoteWeights{w_url, static_cast<double>(static_cast<float>(1.0 - w_url))};

  if (report) {
    report->urlnet_epoch_loss = url.epoch_loss;
    report->warnings.insert(report->warnings.end(), url.warnings.begin(), url.warnings.end());
    std::vector<double> fused;
    for (std::size_t i = 0; i < p_url.size(); ++i) {
      fused.push_back(soft_vote(p_url[i], p_html[i], model.weights).p_final);
    }
    report->val_f1_url = compute_metrics(confusion_from_proba(val_labels, p_url)).f1;
    report->val_f1_html = compute_metrics(confusion_from_proba(val_labels, p_html)).f1;
    report->val_f1_fused = compute_metrics(confusion_from_proba(val_labels, fused)).f1;
  }
  return model;
}

}  // namespace phishkey
