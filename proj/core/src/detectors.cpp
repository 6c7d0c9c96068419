#include "phishkey/detectors.hpp"

#include "phishkey/error.hpp"
#include "phishkey/html_tokenizer.hpp"

namespace phishkey {

double CropModel::html_proba(std::string_view html) const {
  const std::vector<std::string> tokens = tokenize(first_words(html, words));
  return forest.predict_proba(to_bow(tokens, vocabulary));
}

CropModel train_crop(const Corpus& train, std::size_t words, std::size_t vocab_cap,
                     const ForestParams& forest) {
  if (train.empty()) throw DataError("empty training split");
  CropModel model;
  model.words = words;
  std::vector<std::vector<std::string>> token_lists;
  std::vector<Label> labels;
  for (const Sample& s : train.samples()) {
    token_lists.push_back(tokenize(first_words(s.html, words)));
    labels.push_back(s.label);
  }
  model.vocabulary = build_vocabulary_from_tokens(token_lists, vocab_cap);
  if (model.vocabulary.empty()) throw DataError("cropping baseline vocabulary is empty");
  std::vector<BowVector> rows;
  rows.reserve(token_lists.size());
  for (const auto& tokens : token_lists) rows.push_back(to_bow(tokens, model.vocabulary));
  model.forest = train_forest(rows, labels, forest);
  return model;
}

namespace {

class PhishKeyDetector : public Detector {
 public:
  PhishKeyDetector(PhishKeyModel model, std::optional<CropModel> crop, VoteWeights crop_weights)
      : model_(std::move(model)), classifier_(model_), crop_(std::move(crop)), crop_weights_(crop_weights) {}

  std::vector<std::string> methods() const override {
    std::vector<std::string> m = {"phishkey", "url_cnn", "cape_rf"};
    if (crop_) {
      m.push_back("crop_rf");
      m.push_back("crop_hybrid");
    }
    return m;
  }

  std::vector<double> score(const Sample& sample) const override {
    const Prediction p = classifier_.predict(sample);
    std::vector<double> out = {p.vote.p_final, p.p_url, p.p_html};
    if (crop_) {
      const double p_crop = crop_->html_proba(sample.html);
      out.push_back(p_crop);
      out.push_back(soft_vote(p.p_url, p_crop, crop_weights_).p_final);
    }
    return out;
  }

 private:
  PhishKeyModel model_;
  PhishKeyClassifier classifier_;
  std::optional<CropModel> crop_;
  VoteWeights crop_weights_;
};

}  // namespace

DetectorFactory phishkey_factory(DetectorOptions options) {
  return [options = std::move(options)](const Corpus& train, const Corpus& validation) -> std::unique_ptr<Detector> {
    TrainReport report;
    PhishKeyModel model = train_phishkey(train, validation, options.pipeline, &report);
    if (options.on_trained) options.on_trained(report);
    if (!options.crop_baseline) {
      return std::make_unique<PhishKeyDetector>(std::move(model), std::nullopt, VoteWeights{});
    }
    CropModel crop = train_crop(train, options.crop_words, options.pipeline.cape.vocab_cap, options.pipeline.forest);
    const PhishKeyClassifier classifier(model);
    std::vector<double> p_url;
    std::vector<double> p_crop;
    std::vector<Label> labels;
    for (const Sample& s : validation.samples()) {
      p_url.push_back(classifier.url_proba(s.url));
      p_crop.push_back(crop.html_proba(s.html));
      labels.push_back(s.label);
    }
    const VoteWeights w = fit_weights(p_url, p_crop, labels, options.pipeline.grid_step);
    return std::make_unique<PhishKeyDetector>(std::move(model), std::move(crop), w);
  };
}

}  // namespace phishkey
