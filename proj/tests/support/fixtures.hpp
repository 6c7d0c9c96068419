#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "phishkey/pipeline.hpp"
#include "phishkey/synthetic.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("phishkey-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Small, fast settings: a model trains in about a second.
inline phishkey::PipelineConfig small_config(std::uint64_t seed = 7) {
  phishkey::PipelineConfig c;
  c.embeddings.epochs = 1;
  c.embeddings.seed = seed;
  c.forest.n_trees = 15;
  c.forest.seed = seed;
  c.urlnet.shape.filters = 8;
  c.urlnet.epochs = 2;
  c.urlnet.seed = seed;
  return c;
}

inline phishkey::Corpus small_corpus(std::size_t n = 200, std::uint64_t seed = 3) {
  phishkey::SyntheticOptions o;
  o.samples = n;
  o.seed = seed;
  o.min_words = 60;
  o.max_words = 150;
  return phishkey::generate_corpus(o);
}

}  // namespace fixtures
