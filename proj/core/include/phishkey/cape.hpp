#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phishkey/corpus.hpp"
#include "phishkey/embeddings.hpp"
#include "phishkey/html_tokenizer.hpp"

namespace phishkey {

inline constexpr std::size_t kDefaultSelectionSize = 2000;
inline constexpr std::size_t kDefaultVocabularyCap = 20000;

/// a.b / (|a| |b|); 0 when either norm is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const float> a, std::span<const double> b);

struct ClassCentroids {
  std::vector<double> phishing;
  std::vector<double> legitimate;
  /// Number of embedding vectors (token occurrences) behind each centroid.
  std::uint64_t phishing_count = 0;
  std::uint64_t legitimate_count = 0;

  std::size_t dim() const { return phishing.size(); }
  const std::vector<double>& of(Label label) const {
    return label == Label::Phishing ? phishing : legitimate;
  }
};

/// Component-wise mean of each class multiset. Throws DataError if a class
/// is empty or dimensions disagree.
ClassCentroids compute_centroids(std::span<const std::vector<double>> phishing,
                                 std::span<const std::vector<double>> legitimate);

struct CentroidOptions {
  /// 0 = plain class mean. k > 0 clusters each class's token vectors with
  /// k-means and uses the mean of the k cluster centres instead.
  std::size_t kmeans_clusters = 0;
  std::size_t kmeans_iterations = 50;
  std::uint64_t seed = 1;
};

/// Centroids over every in-vocabulary token occurrence of the training
/// streams, grouped by the stream's label. Each occurrence contributes once.
ClassCentroids centroids_from_streams(std::span<const TokenStream> streams,
                                      std::span<const Label> labels, const EmbeddingModel& model,
                                      const CentroidOptions& options = {});

/// Weighted Lloyd's k-means; returns k centres (fewer if there are fewer
/// distinct points). Seeding is k-means++ from `seed`.
std::vector<std::vector<double>> weighted_kmeans(std::span<const std::vector<double>> points,
                                                 std::span<const double> weights, std::size_t k,
                                                 std::size_t iterations, std::uint64_t seed);

struct SelectionResult {
  std::string sample_id;
  std::vector<std::string> tokens;
  /// Score of each selected token, non-increasing.
  std::vector<double> scores;
  std::size_t m = kDefaultSelectionSize;
};

/// Scores each token occurrence by max(sim(v, c_phishing), sim(v, c_legitimate))
/// and keeps the m best. Ties go to the earlier document position. OOV
/// tokens are ignored; nothing is padded.
class KeyComponentSelector {
 public:
  KeyComponentSelector(const EmbeddingModel& model, const ClassCentroids& centroids);

  /// Score of an embedding row.
  double score(std::size_t row) const { return row_scores_[row]; }

  SelectionResult select(const TokenStream& stream, std::size_t m = kDefaultSelectionSize) const;

 private:
  const EmbeddingModel* model_;
  std::vector<double> row_scores_;
};

SelectionResult select_key_tokens(const TokenStream& stream, const EmbeddingModel& model,
                                  const ClassCentroids& centroids,
                                  std::size_t m = kDefaultSelectionSize);

/// Ordered, duplicate-free token list; position is the BoW feature index.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> entries);

  const std::vector<std::string>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::string& operator[](std::size_t i) const { return entries_[i]; }
  std::optional<std::uint32_t> index_of(std::string_view token) const;

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> index_;
};

/// Distinct tokens across the selections, by total selected count
/// (descending, ties lexicographic), truncated to `cap`.
Vocabulary build_vocabulary(std::span<const SelectionResult> selections,
                            std::size_t cap = kDefaultVocabularyCap);

/// Same ranking over arbitrary token lists.
Vocabulary build_vocabulary_from_tokens(std::span<const std::vector<std::string>> token_lists,
                                        std::size_t cap = kDefaultVocabularyCap);

/// Sparse token-count vector of logical length `dim`.
struct BowVector {
  std::string sample_id;
  std::size_t dim = 0;
  /// (feature index, count) with strictly increasing indices and count > 0.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

  std::uint32_t count(std::size_t index) const;
  std::uint64_t total() const;
  std::vector<std::uint32_t> dense() const;
};

BowVector to_bow(const SelectionResult& selection, const Vocabulary& vocab);
BowVector to_bow(std::span<const std::string> tokens, const Vocabulary& vocab,
                 std::string sample_id = {});

/// Sparse triplets, one "sample_id<TAB>vocab_index<TAB>count" line per nonzero.
void write_bow_triplets(std::span<const BowVector> rows, std::ostream& out);

/// One token per line, in rank order.
void write_vocabulary(const Vocabulary& vocab, std::ostream& out);

}  // namespace phishkey
