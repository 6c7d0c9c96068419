#include "phishkey/synthetic.hpp"

#include <array>
#include <cmath>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "phishkey/error.hpp"
#include "phishkey/random.hpp"

namespace phishkey {
namespace {

constexpr std::array<std::string_view, 24> kPhishingWords = {
    "verify",  "account",   "password", "login",    "signin",  "secure",   "update",      "confirm",
    "suspend", "billing",   "bank",     "wallet",   "unlock",  "urgent",   "credentials", "security",
    "alert",   "identity",  "restore",  "validate", "expired", "payment",  "limited",     "authorize"};

constexpr std::array<std::string_view, 24> kLegitimateWords = {
    "news",    "blog",    "about",    "contact", "careers", "privacy", "terms",   "article",
    "recipe",  "weather", "sports",   "events",  "community", "docs",  "help",    "shop",
    "gallery", "archive", "podcast",  "review",  "travel",  "music",   "library", "forum"};

constexpr std::array<std::string_view, 10> kBlockTags = {"div", "section", "article", "p", "span",
                                                         "li",  "td",      "header",  "footer", "nav"};

constexpr std::size_t kSharedPool = 500;
constexpr std::size_t kClassPool = 300;

// Pseudo-words are built from a syllable inventory chosen by the dialect, so
// lexicons of different dialects barely intersect.
std::vector<std::string> make_lexicon(std::uint64_t dialect, std::uint64_t pool, std::size_t size) {
  static constexpr std::array<std::string_view, 2> kOnsets = {"bdfgklmnprstvz", "chjqwxy"};
  static constexpr std::string_view kVowels = "aeiou";
  const std::string_view onsets = kOnsets[dialect % 2];
  Rng rng(Rng::derive(dialect * 7919 + 17, pool));
  std::unordered_set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < size) {
    std::string w;
    const std::size_t syllables = 2 + rng.uniform_index(3);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += onsets[rng.uniform_index(onsets.size())];
      w += kVowels[rng.uniform_index(kVowels.size())];
    }
    // Dialects beyond the first two get a distinguishing suffix.
    if (dialect >= 2) w += std::to_string(dialect);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Skewed index: low ranks are drawn far more often, roughly like word counts.
std::size_t skewed(Rng& rng, std::size_t n) {
  const double u = rng.uniform01();
  return static_cast<std::size_t>(u * u * static_cast<double>(n));
}

struct Lexicons {
  std::vector<std::string> shared;
  std::array<std::vector<std::string>, 2> by_class;
};

class PageWriter {
 public:
  PageWriter(const SyntheticOptions& options, const Lexicons& lexicons, Rng& rng)
      : options_(options), lexicons_(lexicons), rng_(rng) {}

  std::string word(Label label) {
    const double u = rng_.uniform01();
    const bool own = rng_.uniform01() < options_.purity;
    const Label flavour = own ? label : opposite(label);
    if (u < options_.english_rate) {
      const auto& list = is_phishing(flavour) ? kPhishingWords : kLegitimateWords;
      return std::string(list[skewed(rng_, list.size())]);
    }
    if (u < options_.english_rate + options_.class_rate) {
      const auto& pool = lexicons_.by_class[static_cast<std::size_t>(flavour)];
      return pool[skewed(rng_, pool.size())];
    }
    return lexicons_.shared[skewed(rng_, lexicons_.shared.size())];
  }

  std::string sentence(Label label, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += ' ';
      out += word(label);
    }
    return out;
  }

  std::string attribute_word() { return lexicons_.shared[skewed(rng_, 60)]; }

  std::string page(Label label, std::size_t text_words) {
    std::string html = "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>";
    std::size_t budget = text_words;
    const std::size_t title = std::min<std::size_t>(budget, 3 + rng_.uniform_index(4));
    html += sentence(label, title);
    budget -= title;
    html += "</title>\n<link rel=\"stylesheet\" href=\"/static/" + attribute_word() + ".css\">\n</head>\n<body>\n";

    while (budget > 0) {
      const std::size_t n = std::min<std::size_t>(budget, 8 + rng_.uniform_index(30));
      budget -= n;
      const std::string_view tag = kBlockTags[rng_.uniform_index(kBlockTags.size())];
      const double kind = rng_.uniform01();
      if (kind < 0.15) {
        html += "<a href=\"/" + attribute_word() + "/" + attribute_word() + "\">" + sentence(label, n) + "</a>\n";
      } else if (kind < 0.22) {
        html += "<form action=\"/" + attribute_word() + "\" method=\"post\">\n<label>" + sentence(label, n) +
                "</label>\n<input type=\"text\" name=\"" + attribute_word() + "\">\n<button>" +
                std::string(word(label)) + "</button>\n</form>\n";
      } else {
        html += "<";
        html += tag;
        html += " class=\"" + attribute_word() + "\">" + sentence(label, n) + "</";
        html += tag;
        html += ">\n";
      }
    }
    if (rng_.uniform01() < 0.5) {
      // Inline script with an opaque blob, as pages often carry.
      static constexpr std::string_view kB64 =
          "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
      std::string blob;
      const std::size_t len = 40 + rng_.uniform_index(120);
      for (std::size_t i = 0; i < len; ++i) blob += kB64[rng_.uniform_index(kB64.size())];
      html += "<script>var " + attribute_word() + " = \"" + blob + "\";</script>\n";
    }
    html += "</body>\n</html>\n";
    return html;
  }

  std::string url(Label label) {
    const bool own = rng_.uniform01() < options_.url_signal;
    const bool phishy = is_phishing(own ? label : opposite(label));
    const auto pick = [&](const auto& list) { return std::string(list[rng_.uniform_index(list.size())]); };
    const auto host_word = [&] { return lexicons_.shared[rng_.uniform_index(lexicons_.shared.size())]; };
    std::string u;
    if (phishy) {
      u = rng_.uniform01() < 0.6 ? "http://" : "https://";
      if (rng_.uniform01() < 0.2) {
        for (int i = 0; i < 4; ++i) {
          if (i) u += '.';
          u += std::to_string(1 + rng_.uniform_index(254));
        }
      } else {
        u += pick(kPhishingWords) + "-" + host_word() + std::to_string(rng_.uniform_index(1000)) + "." +
             pick(std::array<std::string_view, 5>{"xyz", "top", "info", "online", "com"});
      }
      u += "/" + pick(kPhishingWords) + "/" + host_word() + ".php?id=" + std::to_string(rng_.next() % 1000000);
    } else {
      u = rng_.uniform01() < 0.9 ? "https://www." : "http://www.";
      u += host_word() + "." + pick(std::array<std::string_view, 4>{"com", "org", "net", "edu"});
      u += "/" + pick(kLegitimateWords) + "/" + host_word();
      if (rng_.uniform01() < 0.5) u += "/" + std::to_string(2000 + rng_.uniform_index(25));
    }
    return u;
  }

 private:
  const SyntheticOptions& options_;
  const Lexicons& lexicons_;
  Rng& rng_;
};

}  // namespace

Corpus generate_corpus(const SyntheticOptions& options) {
  if (options.samples < 2) throw ConfigError("synthetic corpus needs at least 2 samples");
  if (!(options.phishing_fraction > 0.0 && options.phishing_fraction < 1.0)) {
    throw ConfigError("phishing_fraction must be in (0, 1)");
  }
  if (options.min_words == 0 || options.min_words > options.max_words) {
    throw ConfigError("synthetic word range must satisfy 0 < min_words <= max_words");
  }
  if (options.english_rate < 0.0 || options.class_rate < 0.0 || options.english_rate + options.class_rate > 1.0) {
    throw ConfigError("english_rate and class_rate must be non-negative and sum to at most 1");
  }

  Lexicons lexicons;
  lexicons.shared = make_lexicon(options.dialect, 0, kSharedPool);
  lexicons.by_class[0] = make_lexicon(options.dialect, 1, kClassPool);
  lexicons.by_class[1] = make_lexicon(options.dialect, 2, kClassPool);

  const auto n_phishing = static_cast<std::size_t>(
      std::llround(static_cast<double>(options.samples) * options.phishing_fraction));
  std::vector<Label> labels(options.samples, Label::Legitimate);
  for (std::size_t i = 0; i < n_phishing; ++i) labels[i] = Label::Phishing;
  Rng rng(options.seed);
  rng.shuffle(labels);

  PageWriter writer(options, lexicons, rng);
  std::vector<Sample> samples;
  samples.reserve(options.samples);
  const std::string prefix = options.provenance.empty() ? "s" : options.provenance;
  for (std::size_t i = 0; i < options.samples; ++i) {
    const std::size_t words =
        options.min_words + rng.uniform_index(options.max_words - options.min_words + 1);
    Sample s;
    s.id = prefix + "-" + std::to_string(i);
    s.label = labels[i];
    s.url = writer.url(s.label);
    s.html = writer.page(s.label, words);
    samples.push_back(std::move(s));
  }
  return Corpus(std::move(samples), options.provenance);
}

SyntheticOptions donor_options(std::uint64_t seed, std::size_t samples) {
  SyntheticOptions o;
  o.samples = samples;
  o.seed = seed;
  o.dialect = 1;
  o.min_words = 2200;
  o.max_words = 3000;
  o.provenance = "synthetic-donor";
  return o;
}

}  // namespace phishkey
