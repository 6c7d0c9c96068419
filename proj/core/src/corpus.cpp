#include "phishkey/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "phishkey/error.hpp"

namespace phishkey {
namespace fs = std::filesystem;

std::string_view to_string(Label label) {
  return label == Label::Phishing ? "phishing" : "legitimate";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (lowered == "phishing") return Label::Phishing;
  if (lowered == "legitimate") return Label::Legitimate;
  return std::nullopt;
}

Corpus::Corpus(std::vector<Sample> samples, std::string provenance)
    : samples_(std::move(samples)), provenance_(std::move(provenance)) {
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.url.empty()) throw DataError("sample '" + s.id + "' has an empty url");
    auto [it, inserted] = seen.emplace(s.id, i);
    if (!inserted) {
      throw DataError("duplicate sample id '" + s.id + "' (records " +
                      std::to_string(it->second + 1) + " and " + std::to_string(i + 1) + ")");
    }
  }
}

ClassCounts Corpus::class_counts() const {
  ClassCounts counts;
  for (const Sample& s : samples_) {
    if (s.label == Label::Phishing) {
      ++counts.phishing;
    } else {
      ++counts.legitimate;
    }
  }
  return counts;
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].id == id) return i;
  }
  return std::nullopt;
}

Corpus Corpus::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Sample> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(samples_.at(i));
  return Corpus(std::move(picked), provenance_);
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string trim(std::string text) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!text.empty() && is_space(static_cast<unsigned char>(text.back()))) text.pop_back();
  std::size_t start = 0;
  while (start < text.size() && is_space(static_cast<unsigned char>(text[start]))) ++start;
  return text.substr(start);
}

LoadedCorpus load_jsonl(const fs::path& path, std::string provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());

  LoadReport report;
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  auto malformed = [&](const std::string& why) {
    ++report.malformed;
    report.messages.push_back(path.filename().string() + ":" + std::to_string(line_no) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++report.records_read;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      malformed(std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!record.is_object()) {
      malformed("record is not a JSON object");
      continue;
    }
    const auto string_field = [&](const char* key) -> std::optional<std::string> {
      auto it = record.find(key);
      if (it == record.end() || !it->is_string()) return std::nullopt;
      return it->get<std::string>();
    };
    auto url = string_field("url");
    auto html = string_field("html");
    auto label_text = string_field("label");
    if (!url || url->empty()) {
      malformed("missing or empty 'url'");
      continue;
    }
    if (!html) {
      malformed("missing 'html'");
      continue;
    }
    if (!label_text) {
      malformed("missing 'label'");
      continue;
    }

    Sample sample;
    if (auto id = string_field("id"); id && !id->empty()) {
      sample.id = *id;
    } else if (auto it = record.find("id"); it != record.end() && it->is_number_integer()) {
      sample.id = std::to_string(it->get<long long>());
    } else {
      sample.id = "line-" + std::to_string(line_no);
    }
    auto label = parse_label(*label_text);
    if (!label) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": record '" + sample.id +
                      "' has unknown label '" + *label_text + "'");
    }
    sample.label = *label;
    sample.url = std::move(*url);
    sample.html = std::move(*html);
    samples.push_back(std::move(sample));
  }

  if (provenance.empty()) provenance = path.stem().string();
  return {Corpus(std::move(samples), std::move(provenance)), std::move(report)};
}

LoadedCorpus load_directory(const fs::path& root, std::string provenance) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw DataError("not a directory: " + root.string());

  LoadReport report;
  std::vector<Sample> samples;

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  for (const fs::path& dir : class_dirs) {
    auto label = parse_label(dir.filename().string());
    if (!label) {
      throw DataError("unknown label directory '" + dir.filename().string() + "' under " +
                      root.string());
    }
    std::vector<fs::path> pages;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".html") {
        pages.push_back(entry.path());
      }
    }
    std::sort(pages.begin(), pages.end());
    for (const fs::path& page : pages) {
      ++report.records_read;
      fs::path url_file = page;
      url_file.replace_extension(".url");
      if (!fs::exists(url_file)) {
        ++report.malformed;
        report.messages.push_back(page.string() + ": missing sidecar " +
                                  url_file.filename().string());
        continue;
      }
      std::string url = trim(read_file(url_file));
      if (url.empty()) {
        ++report.malformed;
        report.messages.push_back(url_file.string() + ": empty url");
        continue;
      }
      samples.push_back(Sample{page.stem().string(), std::move(url), read_file(page), *label});
    }
  }

  if (provenance.empty()) provenance = root.filename().string();
  return {Corpus(std::move(samples), std::move(provenance)), std::move(report)};
}

}  // namespace

LoadedCorpus load_corpus(const fs::path& path, CorpusFormat format, std::string provenance) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw DataError("no such corpus path: " + path.string());
  return format == CorpusFormat::Jsonl ? load_jsonl(path, std::move(provenance))
                                       : load_directory(path, std::move(provenance));
}

void save_corpus_jsonl(const Corpus& corpus, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Sample& s : corpus.samples()) {
    nlohmann::ordered_json record;
    record["id"] = s.id;
    record["url"] = s.url;
    record["html"] = s.html;
    record["label"] = std::string(to_string(s.label));
    // Raw HTML may carry invalid UTF-8; replace rather than fail on dump.
    out << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace phishkey
