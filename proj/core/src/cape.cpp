#include "phishkey/cape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "phishkey/error.hpp"
#include "phishkey/random.hpp"

namespace phishkey {
namespace {

template <typename A, typename B>
double cosine_impl(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw ConfigError("cosine_similarity: dimension mismatch");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = static_cast<double>(a[i]);
    const auto y = static_cast<double>(b[i]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<double> mean_of(std::span<const std::vector<double>> vectors, std::size_t dim,
                            const char* class_name) {
  if (vectors.empty()) throw DataError(std::string("no embedding vectors for class ") + class_name);
  std::vector<double> sum(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DataError("centroid input vectors have inconsistent dimensions");
    for (std::size_t k = 0; k < dim; ++k) sum[k] += v[k];
  }
  for (double& s : sum) s /= static_cast<double>(vectors.size());
  return sum;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return d;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

double cosine_similarity(std::span<const float> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

ClassCentroids compute_centroids(std::span<const std::vector<double>> phishing,
                                 std::span<const std::vector<double>> legitimate) {
  if (phishing.empty()) throw DataError("no embedding vectors for class phishing");
  const std::size_t dim = phishing.front().size();
  ClassCentroids c;
  c.phishing = mean_of(phishing, dim, "phishing");
  c.legitimate = mean_of(legitimate, dim, "legitimate");
  c.phishing_count = phishing.size();
  c.legitimate_count = legitimate.size();
  return c;
}

std::vector<std::vector<double>> weighted_kmeans(std::span<const std::vector<double>> points,
                                                 std::span<const double> weights, std::size_t k,
                                                 std::size_t iterations, std::uint64_t seed) {
  if (points.empty() || k == 0) return {};
  if (weights.size() != points.size()) throw ConfigError("weighted_kmeans: weights/points mismatch");
  const std::size_t dim = points.front().size();
  k = std::min(k, points.size());
  Rng rng(seed);

  // k-means++ seeding, weighted by point mass.
  std::vector<std::vector<double>> centres;
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  auto pick = [&](const std::vector<double>& mass) {
    double total = 0.0;
    for (double m : mass) total += m;
    double r = rng.uniform01() * total;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      r -= mass[i];
      if (r < 0.0) return i;
    }
    return mass.size() - 1;
  };
  centres.push_back(points[pick(std::vector<double>(weights.begin(), weights.end()))]);
  while (centres.size() < k) {
    std::vector<double> mass(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centres.back()));
      mass[i] = weights[i] * nearest[i];
    }
    double total = 0.0;
    for (double m : mass) total += m;
    if (total <= 0.0) break;  // fewer distinct points than k
    centres.push_back(points[pick(mass)]);
  }

  std::vector<std::size_t> assignment(points.size(), 0);
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(points[i], centres[0]);
      for (std::size_t c = 1; c < centres.size(); ++c) {
        const double d = squared_distance(points[i], centres[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assignment[i] != best) changed = true;
      assignment[i] = best;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(centres.size(), std::vector<double>(dim, 0.0));
    std::vector<double> mass(centres.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      mass[assignment[i]] += weights[i];
      for (std::size_t d = 0; d < dim; ++d) sums[assignment[i]][d] += weights[i] * points[i][d];
    }
    for (std::size_t c = 0; c < centres.size(); ++c) {
      if (mass[c] <= 0.0) continue;  // empty cluster keeps its old centre
      for (std::size_t d = 0; d < dim; ++d) centres[c][d] = sums[c][d] / mass[c];
    }
  }
  return centres;
}

ClassCentroids centroids_from_streams(std::span<const TokenStream> streams,
                                      std::span<const Label> labels, const EmbeddingModel& model,
                                      const CentroidOptions& options) {
  if (streams.size() != labels.size()) throw DataError("centroids: streams/labels size mismatch");
  const std::size_t dim = model.dim();
  std::vector<std::uint64_t> counts[2] = {std::vector<std::uint64_t>(model.size(), 0),
                                          std::vector<std::uint64_t>(model.size(), 0)};
  for (std::size_t s = 0; s < streams.size(); ++s) {
    auto& class_counts = counts[static_cast<std::size_t>(labels[s])];
    for (const std::string& tok : streams[s].tokens) {
      if (auto row = model.index_of(tok)) ++class_counts[*row];
    }
  }

  ClassCentroids result;
  for (Label label : kLabels) {
    const auto& class_counts = counts[static_cast<std::size_t>(label)];
    std::uint64_t total = 0;
    for (auto c : class_counts) total += c;
    if (total == 0) {
      throw DataError("no in-vocabulary tokens for class " + std::string(to_string(label)));
    }

    std::vector<double> centroid(dim, 0.0);
    if (options.kmeans_clusters == 0) {
      for (std::size_t row = 0; row < model.size(); ++row) {
        if (class_counts[row] == 0) continue;
        const auto weight = static_cast<double>(class_counts[row]);
        const auto v = model.row(row);
        for (std::size_t k = 0; k < dim; ++k) centroid[k] += weight * v[k];
      }
      for (double& x : centroid) x /= static_cast<double>(total);
    } else {
      std::vector<std::vector<double>> points;
      std::vector<double> weights;
      for (std::size_t row = 0; row < model.size(); ++row) {
        if (class_counts[row] == 0) continue;
        const auto v = model.row(row);
        points.emplace_back(v.begin(), v.end());
        weights.push_back(static_cast<double>(class_counts[row]));
      }
      const auto centres =
          weighted_kmeans(points, weights, options.kmeans_clusters, options.kmeans_iterations,
                          Rng::derive(options.seed, static_cast<std::uint64_t>(label)));
      for (const auto& c : centres) {
        for (std::size_t k = 0; k < dim; ++k) centroid[k] += c[k];
      }
      for (double& x : centroid) x /= static_cast<double>(centres.size());
    }

    if (label == Label::Phishing) {
      result.phishing = std::move(centroid);
      result.phishing_count = total;
    } else {
      result.legitimate = std::move(centroid);
      result.legitimate_count = total;
    }
  }
  return result;
}

KeyComponentSelector::KeyComponentSelector(const EmbeddingModel& model,
                                           const ClassCentroids& centroids)
    : model_(&model) {
  if (centroids.phishing.size() != model.dim() || centroids.legitimate.size() != model.dim()) {
    throw ModelError("centroid dimension does not match the embedding model");
  }
  row_scores_.resize(model.size());
  for (std::size_t row = 0; row < model.size(); ++row) {
    const auto v = model.row(row);
    row_scores_[row] = std::max(cosine_similarity(v, centroids.phishing),
                                cosine_similarity(v, centroids.legitimate));
  }
}

SelectionResult KeyComponentSelector::select(const TokenStream& stream, std::size_t m) const {
  if (m == 0) throw ConfigError("selection size m must be at least 1");
  struct Candidate {
    double score;
    std::uint32_t position;
    std::uint32_t row;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(stream.tokens.size());
  for (std::size_t pos = 0; pos < stream.tokens.size(); ++pos) {
    if (auto row = model_->index_of(stream.tokens[pos])) {
      candidates.push_back({row_scores_[*row], static_cast<std::uint32_t>(pos), *row});
    }
  }
  const auto better = [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.position != b.position) return a.position < b.position;
    return stream.tokens[a.position] < stream.tokens[b.position];
  };
  const std::size_t keep = std::min(m, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), better);

  SelectionResult result;
  result.sample_id = stream.sample_id;
  result.m = m;
  result.tokens.reserve(keep);
  result.scores.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    result.tokens.push_back(model_->token(candidates[i].row));
    result.scores.push_back(candidates[i].score);
  }
  return result;
}

SelectionResult select_key_tokens(const TokenStream& stream, const EmbeddingModel& model,
                                  const ClassCentroids& centroids, std::size_t m) {
  return KeyComponentSelector(model, centroids).select(stream, m);
}

Vocabulary::Vocabulary(std::vector<std::string> entries) : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], static_cast<std::uint32_t>(i)).second) {
      throw ModelError("duplicate vocabulary entry '" + entries_[i] + "'");
    }
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

Vocabulary rank_counts(std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>>& counts,
                       std::size_t cap) {
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > cap) ranked.resize(cap);
  std::vector<std::string> entries;
  entries.reserve(ranked.size());
  for (auto& [tok, count] : ranked) entries.push_back(std::move(tok));
  return Vocabulary(std::move(entries));
}

void add_counts(std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>>& counts,
                std::span<const std::string> tokens) {
  for (const std::string& tok : tokens) {
    if (auto it = counts.find(tok); it != counts.end()) {
      ++it->second;
    } else {
      counts.emplace(tok, 1);
    }
  }
}

}  // namespace

Vocabulary build_vocabulary(std::span<const SelectionResult> selections, std::size_t cap) {
  if (selections.empty()) throw DataError("cannot build a vocabulary from zero selections");
  std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts;
  for (const auto& sel : selections) add_counts(counts, sel.tokens);
  return rank_counts(counts, cap);
}

Vocabulary build_vocabulary_from_tokens(std::span<const std::vector<std::string>> token_lists,
                                        std::size_t cap) {
  if (token_lists.empty()) throw DataError("cannot build a vocabulary from zero documents");
  std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts;
  for (const auto& tokens : token_lists) add_counts(counts, tokens);
  return rank_counts(counts, cap);
}

std::uint32_t BowVector::count(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const auto& e, std::size_t i) { return e.first < i; });
  return it != entries.end() && it->first == index ? it->second : 0;
}

std::uint64_t BowVector::total() const {
  std::uint64_t sum = 0;
  for (const auto& e : entries) sum += e.second;
  return sum;
}

std::vector<std::uint32_t> BowVector::dense() const {
  std::vector<std::uint32_t> out(dim, 0);
  for (const auto& [index, c] : entries) out[index] = c;
  return out;
}

BowVector to_bow(std::span<const std::string> tokens, const Vocabulary& vocab,
                 std::string sample_id) {
  std::vector<std::uint32_t> indices;
  indices.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    if (auto idx = vocab.index_of(tok)) indices.push_back(*idx);
  }
  std::sort(indices.begin(), indices.end());
  BowVector bow;
  bow.sample_id = std::move(sample_id);
  bow.dim = vocab.size();
  for (std::uint32_t idx : indices) {
    if (!bow.entries.empty() && bow.entries.back().first == idx) {
      ++bow.entries.back().second;
    } else {
      bow.entries.emplace_back(idx, 1);
    }
  }
  return bow;
}

BowVector to_bow(const SelectionResult& selection, const Vocabulary& vocab) {
  return to_bow(selection.tokens, vocab, selection.sample_id);
}

void write_bow_triplets(std::span<const BowVector> rows, std::ostream& out) {
  for (const BowVector& row : rows) {
    for (const auto& [index, c] : row.entries) {
      out << row.sample_id << '\t' << index << '\t' << c << '\n';
    }
  }
}

void write_vocabulary(const Vocabulary& vocab, std::ostream& out) {
  for (const std::string& tok : vocab.entries()) out << tok << '\n';
}

}  // namespace phishkey
