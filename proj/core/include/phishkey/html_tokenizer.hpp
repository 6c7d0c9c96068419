#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "phishkey/corpus.hpp"

namespace phishkey {

/// Tokens longer than this are kept in the stream but may be pruned when a
/// vocabulary is built.
inline constexpr std::size_t kLongTokenLength = 64;

inline bool is_long_token(std::string_view token) { return token.size() > kLongTokenLength; }

struct TokenStream {
  std::string sample_id;
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

/// Lexes raw HTML (markup, inline script and style, comments) into a
/// lowercase token sequence in document order.
///
///  * An opening tag yields `<name`, a closing tag `</name`; declarations and
///    processing instructions yield `<!doctype`, `<?xml`.
///  * Attribute names are single tokens (quotes stripped). Attribute values,
///    text, comment bodies and script/style bodies are split into words.
///  * A word is a maximal run of ASCII alphanumerics, `_`, `-` and non-ASCII
///    letters that is not made of hyphens only. Everything else separates.
///  * Invalid UTF-8 is replaced by U+FFFD, which acts as a separator.
///
/// Total over arbitrary bytes and never truncates: long documents produce
/// long streams.
std::vector<std::string> tokenize(std::string_view html);

TokenStream tokenize_sample(const Sample& sample);

/// Replaces invalid UTF-8 sequences with U+FFFD and lowercases ASCII.
std::string normalize_html(std::string_view html);

}  // namespace phishkey
