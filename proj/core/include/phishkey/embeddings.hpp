#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phishkey/html_tokenizer.hpp"

namespace phishkey {

inline constexpr std::size_t kEmbeddingDim = 100;

struct EmbeddingParams {
  std::size_t dim = kEmbeddingDim;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  std::size_t min_count = 2;
  double learning_rate = 0.025;
  /// Frequent-token downsampling threshold; 0 disables it.
  double subsample = 1e-3;
  /// Drop tokens longer than kLongTokenLength from the vocabulary.
  bool prune_long_tokens = false;
  std::uint64_t seed = 1;
  /// 1 = deterministic. More workers train lock-free and are not reproducible.
  std::size_t threads = 1;
};

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

/// Token -> dense vector lookup. Immutable once built.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  /// `vectors` is row-major [tokens.size() x dim]. Throws ModelError on
  /// shape mismatch or duplicate tokens.
  EmbeddingModel(std::vector<std::string> tokens, std::vector<float> vectors, std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t row) const { return tokens_[row]; }
  std::optional<std::uint32_t> index_of(std::string_view token) const;

  std::span<const float> row(std::size_t index) const {
    return {vectors_.data() + index * dim_, dim_};
  }

  /// Vector for an in-vocabulary token; nullopt for OOV tokens (callers skip them).
  std::optional<std::span<const float>> embed(std::string_view token) const;

  const std::vector<float>& data() const { return vectors_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<float> vectors_;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> index_;
};

struct EmbeddingTrainingLog {
  /// Mean negative-sampling loss per (center, context) pair, one entry per epoch.
  std::vector<double> epoch_loss;
  std::uint64_t trained_pairs = 0;
};

/// Skip-gram with negative sampling over the given token streams. Streams are
/// training sentences; context windows never cross stream boundaries.
/// Throws DataError when no token reaches min_count.
EmbeddingModel train_embeddings(std::span<const TokenStream> streams, const EmbeddingParams& params,
                                EmbeddingTrainingLog* log = nullptr);

/// Text export: "<vocab_size> <dim>" then one "token v1 ... v_dim" line per token.
void write_embeddings_text(const EmbeddingModel& model, std::ostream& out);
EmbeddingModel read_embeddings_text(std::istream& in);

}  // namespace phishkey
