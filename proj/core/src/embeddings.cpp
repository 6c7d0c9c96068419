#include "phishkey/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "phishkey/error.hpp"
#include "phishkey/random.hpp"

namespace phishkey {

EmbeddingModel::EmbeddingModel(std::vector<std::string> tokens, std::vector<float> vectors,
                               std::size_t dim)
    : dim_(dim), tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  if (dim_ == 0) throw ModelError("embedding dimension must be positive");
  if (vectors_.size() != tokens_.size() * dim_) {
    throw ModelError("embedding matrix has " + std::to_string(vectors_.size()) +
                     " values, expected " + std::to_string(tokens_.size() * dim_));
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      throw ModelError("duplicate embedding token '" + tokens_[i] + "'");
    }
  }
}

std::optional<std::uint32_t> EmbeddingModel::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const float>> EmbeddingModel::embed(std::string_view token) const {
  auto idx = index_of(token);
  if (!idx) return std::nullopt;
  return row(*idx);
}

namespace {

constexpr std::size_t kUnigramTableSize = 1'000'000;
constexpr double kUnigramPower = 0.75;
constexpr double kMinLearningRateFraction = 1e-4;

struct Vocab {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
};

Vocab build_vocab(std::span<const TokenStream> streams, const EmbeddingParams& params) {
  std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> freq;
  for (const TokenStream& stream : streams) {
    for (const std::string& tok : stream.tokens) {
      if (auto it = freq.find(tok); it != freq.end()) {
        ++it->second;
      } else {
        freq.emplace(tok, 1);
      }
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, count] : freq) {
    if (count < params.min_count) continue;
    if (params.prune_long_tokens && is_long_token(tok)) continue;
    kept.emplace_back(tok, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab vocab;
  vocab.tokens.reserve(kept.size());
  vocab.counts.reserve(kept.size());
  for (auto& [tok, count] : kept) {
    vocab.tokens.push_back(std::move(tok));
    vocab.counts.push_back(count);
  }
  return vocab;
}

std::vector<std::uint32_t> build_unigram_table(const std::vector<std::uint64_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += std::pow(static_cast<double>(c), kUnigramPower);
  std::vector<std::uint32_t> table(kUnigramTableSize);
  std::size_t word = 0;
  double cumulative = std::pow(static_cast<double>(counts[0]), kUnigramPower) / total;
  for (std::size_t i = 0; i < kUnigramTableSize; ++i) {
    table[i] = static_cast<std::uint32_t>(word);
    if (static_cast<double>(i + 1) / kUnigramTableSize > cumulative && word + 1 < counts.size()) {
      ++word;
      cumulative += std::pow(static_cast<double>(counts[word]), kUnigramPower) / total;
    }
  }
  return table;
}

inline double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

// Eight independent partial sums so the compiler can vectorise the loop
// without reassociating floating point on its own.
inline float dot(const float* a, const float* b, std::size_t n) {
  float acc[8] = {};
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[k + j] * b[k + j];
  }
  float tail = 0.0f;
  for (; k < n; ++k) tail += a[k] * b[k];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

struct Trainer {
  const EmbeddingParams& params;
  const Vocab& vocab;
  std::vector<std::vector<std::uint32_t>> sentences;  // streams mapped to vocab ids
  std::vector<std::uint32_t> unigram;
  std::vector<double> keep_probability;
  std::vector<float> input;   // token vectors (the model)
  std::vector<float> output;  // context vectors for negative sampling
  std::uint64_t total_words = 0;
  std::atomic<std::uint64_t> words_done{0};

  Trainer(const EmbeddingParams& p, const Vocab& v) : params(p), vocab(v) {}

  void init(std::span<const TokenStream> streams) {
    std::unordered_map<std::string_view, std::uint32_t> ids;
    ids.reserve(vocab.tokens.size());
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
      ids.emplace(vocab.tokens[i], static_cast<std::uint32_t>(i));
    }
    sentences.reserve(streams.size());
    for (const TokenStream& stream : streams) {
      std::vector<std::uint32_t> sentence;
      sentence.reserve(stream.tokens.size());
      for (const std::string& tok : stream.tokens) {
        if (auto it = ids.find(tok); it != ids.end()) sentence.push_back(it->second);
      }
      total_words += sentence.size();
      sentences.push_back(std::move(sentence));
    }

    unigram = build_unigram_table(vocab.counts);

    keep_probability.assign(vocab.counts.size(), 1.0);
    if (params.subsample > 0.0) {
      const double threshold = params.subsample * static_cast<double>(total_words);
      for (std::size_t i = 0; i < vocab.counts.size(); ++i) {
        const double f = static_cast<double>(vocab.counts[i]);
        keep_probability[i] = std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f);
      }
    }

    const std::size_t dim = params.dim;
    input.resize(vocab.tokens.size() * dim);
    output.assign(vocab.tokens.size() * dim, 0.0f);
    Rng rng(params.seed);
    for (float& w : input) {
      w = static_cast<float>((rng.uniform01() - 0.5) / static_cast<double>(dim));
    }
  }

  double learning_rate() const {
    const double budget = static_cast<double>(params.epochs) * static_cast<double>(total_words) + 1.0;
    const double progress = static_cast<double>(words_done.load(std::memory_order_relaxed)) / budget;
    return params.learning_rate * std::max(1.0 - progress, kMinLearningRateFraction);
  }

  // One SGD step: `center` predicts `context` against sampled negatives.
  // Returns the pair's loss.
  double train_pair(std::uint32_t center, std::uint32_t context, double alpha, Rng& rng,
                    std::vector<float>& grad) {
    const std::size_t dim = params.dim;
    float* v = input.data() + static_cast<std::size_t>(center) * dim;
    std::fill(grad.begin(), grad.end(), 0.0f);
    double loss = 0.0;
    for (std::size_t d = 0; d <= params.negatives; ++d) {
      std::uint32_t target = context;
      double label = 1.0;
      if (d > 0) {
        target = unigram[rng.uniform_index(unigram.size())];
        if (target == context) continue;
        label = 0.0;
      }
      float* u = output.data() + static_cast<std::size_t>(target) * dim;
      const double score = dot(v, u, dim);
      const double p = sigmoid(score);
      // -log sigmoid(+-score), floored so saturated pairs stay finite.
      loss -= std::log(std::max(label > 0.5 ? p : 1.0 - p, 1e-12));
      const auto g = static_cast<float>((label - p) * alpha);
      for (std::size_t k = 0; k < dim; ++k) {
        grad[k] += g * u[k];
        u[k] += g * v[k];
      }
    }
    for (std::size_t k = 0; k < dim; ++k) v[k] += grad[k];
    return loss;
  }

  struct EpochStats {
    double loss = 0.0;
    std::uint64_t pairs = 0;
  };

  EpochStats train_range(std::size_t first, std::size_t last, Rng& rng) {
    EpochStats stats;
    std::vector<float> grad(params.dim);
    std::vector<std::uint32_t> kept;
    for (std::size_t s = first; s < last; ++s) {
      const auto& sentence = sentences[s];
      kept.clear();
      for (std::uint32_t w : sentence) {
        if (keep_probability[w] >= 1.0 || rng.uniform01() < keep_probability[w]) kept.push_back(w);
      }
      const double alpha = learning_rate();
      const auto n = static_cast<std::ptrdiff_t>(kept.size());
      for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
        // Effective window shrinks uniformly at random, as in word2vec.
        const auto reduced = static_cast<std::ptrdiff_t>(rng.uniform_index(params.window));
        const auto span = static_cast<std::ptrdiff_t>(params.window) - reduced;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - span);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, pos + span);
        for (std::ptrdiff_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          stats.loss += train_pair(kept[static_cast<std::size_t>(c)],
                                   kept[static_cast<std::size_t>(pos)], alpha, rng, grad);
          ++stats.pairs;
        }
      }
      words_done.fetch_add(sentence.size(), std::memory_order_relaxed);
    }
    return stats;
  }
};

}  // namespace

EmbeddingModel train_embeddings(std::span<const TokenStream> streams, const EmbeddingParams& params,
                                EmbeddingTrainingLog* log) {
  if (params.dim == 0) throw ConfigError("embedding dim must be positive");
  if (params.window == 0) throw ConfigError("embedding window must be positive");
  if (streams.empty()) throw DataError("cannot train embeddings on an empty corpus");

  const Vocab vocab = build_vocab(streams, params);
  if (vocab.tokens.empty()) {
    throw DataError("empty embedding vocabulary: no token occurs at least " +
                    std::to_string(params.min_count) + " times");
  }

  Trainer trainer(params, vocab);
  trainer.init(streams);

  const std::size_t threads = std::max<std::size_t>(1, std::min(params.threads, streams.size()));
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    Trainer::EpochStats total;
    if (threads == 1) {
      Rng rng(Rng::derive(params.seed, epoch));
      total = trainer.train_range(0, trainer.sentences.size(), rng);
    } else {
      std::vector<Trainer::EpochStats> shard_stats(threads);
      std::vector<std::thread> workers;
      const std::size_t n = trainer.sentences.size();
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          Rng rng(Rng::derive(params.seed, epoch * threads + t));
          shard_stats[t] = trainer.train_range(n * t / threads, n * (t + 1) / threads, rng);
        });
      }
      for (auto& w : workers) w.join();
      for (const auto& s : shard_stats) {
        total.loss += s.loss;
        total.pairs += s.pairs;
      }
    }
    if (log) {
      log->epoch_loss.push_back(total.pairs ? total.loss / static_cast<double>(total.pairs) : 0.0);
      log->trained_pairs += total.pairs;
    }
  }

  for (float w : trainer.input) {
    if (!std::isfinite(w)) throw ModelError("embedding training diverged (non-finite weights)");
  }
  return EmbeddingModel(vocab.tokens, std::move(trainer.input), params.dim);
}

void write_embeddings_text(const EmbeddingModel& model, std::ostream& out) {
  out << model.size() << ' ' << model.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << model.token(i);
    for (float v : model.row(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

EmbeddingModel read_embeddings_text(std::istream& in) {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::string header;
  if (!std::getline(in, header)) throw ModelError("embedding file is empty");
  std::istringstream hs(header);
  if (!(hs >> count >> dim) || dim == 0) throw ModelError("bad embedding header: " + header);

  std::vector<std::string> tokens;
  std::vector<float> vectors;
  tokens.reserve(count);
  vectors.reserve(count * dim);
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ModelError("embedding file truncated at row " + std::to_string(i));
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    tokens.push_back(token);
    for (std::size_t k = 0; k < dim; ++k) {
      std::string field;
      float value = 0.0f;
      if (!(ls >> field) ||
          std::from_chars(field.data(), field.data() + field.size(), value).ec != std::errc{}) {
        throw ModelError("bad embedding row for token '" + token + "'");
      }
      vectors.push_back(value);
    }
  }
  return EmbeddingModel(std::move(tokens), std::move(vectors), dim);
}

}  // namespace phishkey
