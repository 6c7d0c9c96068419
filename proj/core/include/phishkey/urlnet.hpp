#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phishkey/corpus.hpp"

namespace phishkey {

inline constexpr std::size_t kUrlLength = 180;
inline constexpr std::size_t kCharEmbeddingDim = 16;

/// Character vocabulary. Index 0 is padding, index 1 is "unknown character",
/// symbols start at 2.
class Charset {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnknown = 1;

  explicit Charset(std::string_view symbols);

  /// Printable ASCII, 0x20 through 0x7E.
  static const Charset& ascii_printable();

  std::size_t size() const { return symbols_.size() + 2; }
  std::uint32_t index_of(char c) const { return table_[static_cast<unsigned char>(c)]; }
  const std::string& symbols() const { return symbols_; }

 private:
  std::string symbols_;
  std::uint32_t table_[256];
};

struct UrlEncoding {
  std::vector<std::uint32_t> indices;
};

/// Lowercases, maps characters through the charset, then truncates or
/// zero-pads to exactly `length` positions.
UrlEncoding encode_url(std::string_view url, const Charset& charset = Charset::ascii_printable(),
                       std::size_t length = kUrlLength);

struct UrlNetShape {
  std::size_t vocab = 97;  // Charset::ascii_printable().size()
  std::size_t length = kUrlLength;
  std::size_t embed_dim = kCharEmbeddingDim;
  std::size_t filters = 256;
  std::size_t kernel = 5;

  std::size_t positions() const { return length - kernel + 1; }
  friend bool operator==(const UrlNetShape&, const UrlNetShape&) = default;
};

struct UrlNetParams {
  UrlNetShape shape;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-7;
  std::uint64_t seed = 1;
};

/// Parameter tensors, row-major:
///   embedding [vocab x embed_dim], conv [filters x kernel x embed_dim],
///   conv_bias [filters], dense [filters], dense_bias [1].
struct UrlNetTensors {
  std::vector<double> embedding;
  std::vector<double> conv;
  std::vector<double> conv_bias;
  std::vector<double> dense;
  std::vector<double> dense_bias;

  static UrlNetTensors zeros(const UrlNetShape& shape);
  std::size_t parameter_count() const;
  /// Visits the five tensors in declaration order.
  template <typename F>
  void for_each(F&& f) {
    f("embedding", embedding);
    f("conv", conv);
    f("conv_bias", conv_bias);
    f("dense", dense);
    f("dense_bias", dense_bias);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("embedding", embedding);
    f("conv", conv);
    f("conv_bias", conv_bias);
    f("dense", dense);
    f("dense_bias", dense_bias);
  }
  friend bool operator==(const UrlNetTensors&, const UrlNetTensors&) = default;
};

/// Character CNN: embedding -> conv1d (valid) -> ReLU -> global max-pool ->
/// dense -> logistic.
class UrlNetModel {
 public:
  UrlNetModel() = default;
  /// Throws ModelError if tensor sizes disagree with the shape or any
  /// weight is non-finite.
  UrlNetModel(UrlNetShape shape, UrlNetTensors weights);

  const UrlNetShape& shape() const { return shape_; }
  const UrlNetTensors& weights() const { return weights_; }

  /// Pre-activation of the output unit.
  double logit(std::span<const std::uint32_t> indices) const;
  double predict_proba(std::span<const std::uint32_t> indices) const;
  double predict_proba(const UrlEncoding& encoding) const { return predict_proba(encoding.indices); }

  /// Binary cross-entropy for one example; adds d(loss)/d(theta) into `grad`.
  double accumulate_gradient(std::span<const std::uint32_t> indices, Label label,
                             UrlNetTensors& grad) const;

 private:
  friend class UrlNetTrainer;
  UrlNetShape shape_;
  UrlNetTensors weights_;
  // Per-character conv responses, derived from weights_.
  std::vector<double> projection_;
};

/// Glorot-uniform conv and dense kernels, uniform(-0.05, 0.05) embeddings,
/// zero biases. Values are representable as 32-bit floats.
UrlNetModel init_urlnet(const UrlNetShape& shape, std::uint64_t seed);

struct UrlNetTrainResult {
  UrlNetModel model;
  std::vector<double> epoch_loss;
  std::vector<std::string> warnings;
};

/// Mini-batch Adam on binary cross-entropy. Deterministic for a fixed seed.
/// Final weights are rounded to 32-bit float precision so the model
/// serializes losslessly.
UrlNetTrainResult train_urlnet(std::span<const UrlEncoding> encodings, std::span<const Label> labels,
                               const UrlNetParams& params);

}  // namespace phishkey
