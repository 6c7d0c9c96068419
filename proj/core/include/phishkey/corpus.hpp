#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phishkey {

enum class Label : std::uint8_t { Phishing = 0, Legitimate = 1 };

inline constexpr std::array<Label, 2> kLabels = {Label::Phishing, Label::Legitimate};

std::string_view to_string(Label label);

/// Case-insensitive parse of "phishing" / "legitimate".
std::optional<Label> parse_label(std::string_view text);

inline Label opposite(Label label) {
  return label == Label::Phishing ? Label::Legitimate : Label::Phishing;
}

inline bool is_phishing(Label label) { return label == Label::Phishing; }

/// One webpage: raw URL, raw HTML exactly as scraped, and its class.
struct Sample {
  std::string id;
  std::string url;
  std::string html;
  Label label = Label::Legitimate;
};

struct ClassCounts {
  std::size_t phishing = 0;
  std::size_t legitimate = 0;

  std::size_t total() const { return phishing + legitimate; }
  std::size_t of(Label label) const {
    return label == Label::Phishing ? phishing : legitimate;
  }
};

class Corpus {
 public:
  Corpus() = default;

  /// Throws DataError on duplicate ids or empty URLs.
  Corpus(std::vector<Sample> samples, std::string provenance);

  const std::vector<Sample>& samples() const { return samples_; }
  const std::string& provenance() const { return provenance_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  ClassCounts class_counts() const;

  /// Index of the sample with the given id, if present.
  std::optional<std::size_t> find(std::string_view id) const;

  /// New corpus holding the samples at `indices`, in that order.
  Corpus subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Sample> samples_;
  std::string provenance_;
};

enum class CorpusFormat { Jsonl, Directory };

/// Malformed records are skipped but never silently: each one is listed here.
struct LoadReport {
  std::size_t records_read = 0;
  std::size_t malformed = 0;
  std::vector<std::string> messages;
};

struct LoadedCorpus {
  Corpus corpus;
  LoadReport report;
};

/// Reads a corpus from a JSONL file (keys id, url, html, label) or from a
/// directory laid out as <root>/{phishing,legitimate}/<id>.html with a
/// sidecar <id>.url file. Unknown labels and duplicate ids throw DataError.
LoadedCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                         std::string provenance = {});

/// Writes canonical JSONL: one object per line, keys in fixed order.
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace phishkey
