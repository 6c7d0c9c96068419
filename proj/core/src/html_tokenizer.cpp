#include "phishkey/html_tokenizer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace phishkey {
namespace {

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z');
}

// Length of a well-formed UTF-8 sequence starting at `pos`, or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return 1;
  std::size_t len = 0;
  std::uint32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[pos + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong forms, surrogates, and values past U+10FFFF.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return 0;
  if (cp >= 0xD800 && cp <= 0xDFFF) return 0;
  if (cp > 0x10FFFF) return 0;
  return len;
}

std::uint32_t decode(std::string_view s, std::size_t pos, std::size_t len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  std::uint32_t cp = len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[pos + k]) & 0x3F);
  return cp;
}

// Non-ASCII code points that separate words: no-break and typographic
// spaces, general punctuation, BOM and the replacement character.
bool is_unicode_separator(std::uint32_t cp) {
  return cp == 0x00A0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x206F) || cp == 0x3000 ||
         cp == 0xFEFF || cp == 0xFFFD || (cp >= 0x80 && cp <= 0x9F);
}

// Width in bytes of the word character at `pos`, or 0 if it separates.
// Input is already normalized, so multi-byte sequences are well formed.
std::size_t word_char_width(std::string_view s, std::size_t pos) {
  const char c = s[pos];
  if (static_cast<unsigned char>(c) < 0x80) {
    return (is_ascii_alnum(c) || c == '_' || c == '-') ? 1 : 0;
  }
  const std::size_t len = utf8_sequence_length(s, pos);
  if (len == 0) return 0;
  return is_unicode_separator(decode(s, pos, len)) ? 0 : len;
}

// Width of whatever sits at `pos`, word character or not.
std::size_t char_width(std::string_view s, std::size_t pos) {
  const std::size_t len = utf8_sequence_length(s, pos);
  return len == 0 ? 1 : len;
}

void emit_word(std::string_view word, std::vector<std::string>& out) {
  for (char c : word) {
    if (c != '-') {
      out.emplace_back(word);
      return;
    }
  }
}

void append_words(std::string_view text, std::vector<std::string>& out) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t w = word_char_width(text, pos);
    if (w == 0) {
      pos += char_width(text, pos);
      continue;
    }
    const std::size_t start = pos;
    while (pos < text.size() && (w = word_char_width(text, pos)) > 0) pos += w;
    emit_word(text.substr(start, pos - start), out);
  }
}

bool is_tag_name_start(char c) { return c >= 'a' && c <= 'z'; }

bool ends_name(char c) {
  return is_ascii_space(c) || c == '/' || c == '>' || c == '<' || c == '=' || c == '"' ||
         c == '\'';
}

class Lexer {
 public:
  Lexer(std::string_view text, std::vector<std::string>& out) : s_(text), out_(out) {}

  void run() {
    while (pos_ < s_.size()) {
      if (s_[pos_] == '<' && try_markup()) continue;
      const std::size_t w = word_char_width(s_, pos_);
      if (w == 0) {
        pos_ += char_width(s_, pos_);
        continue;
      }
      const std::size_t start = pos_;
      while (pos_ < s_.size() && s_[pos_] != '<' && word_char_width(s_, pos_) > 0) {
        pos_ += word_char_width(s_, pos_);
      }
      emit_word(s_.substr(start, pos_ - start), out_);
    }
  }

 private:
  bool starts_with(std::string_view prefix) const {
    return s_.substr(pos_, prefix.size()) == prefix;
  }

  char peek(std::size_t offset) const {
    return pos_ + offset < s_.size() ? s_[pos_ + offset] : '\0';
  }

  // Handles markup at '<'. Returns false when the '<' is plain text.
  bool try_markup() {
    if (starts_with("<!--")) {
      const std::size_t body = pos_ + 4;
      const std::size_t close = s_.find("-->", body);
      const std::size_t end = close == std::string_view::npos ? s_.size() : close;
      append_words(s_.substr(body, end - body), out_);
      pos_ = close == std::string_view::npos ? s_.size() : close + 3;
      return true;
    }
    if (peek(1) == '/' && is_tag_name_start(peek(2))) {
      pos_ += 2;
      emit_tag("</", read_name());
      read_attributes();
      return true;
    }
    const char next = peek(1);
    std::string prefix = "<";
    if ((next == '!' || next == '?') && is_tag_name_start(peek(2))) {
      prefix += next;
      pos_ += 2;
    } else if (is_tag_name_start(next)) {
      pos_ += 1;
    } else {
      return false;
    }
    const std::string_view name = read_name();
    emit_tag(prefix, name);
    const bool closed_normally = read_attributes();
    if (closed_normally && prefix == "<" && (name == "script" || name == "style")) {
      read_raw_text(name);
    }
    return true;
  }

  // The first word of a tag name carries the bracket; anything after
  // punctuation inside the name ("a.b", "x:y") follows as plain words.
  void emit_tag(std::string_view prefix, std::string_view name) {
    std::vector<std::string> words;
    append_words(name, words);
    if (words.empty()) return;
    words.front().insert(0, prefix);
    for (std::string& w : words) out_.push_back(std::move(w));
  }

  std::string_view read_name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !ends_name(s_[pos_])) {
      if (static_cast<unsigned char>(s_[pos_]) >= 0x80 && word_char_width(s_, pos_) == 0) break;
      pos_ += char_width(s_, pos_);
    }
    return s_.substr(start, pos_ - start);
  }

  // Consumes attributes up to and including '>'. Returns true when the tag
  // ended with a plain '>' (not "/>", not EOF, not a stray '<').
  bool read_attributes() {
    bool self_closing = false;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (is_ascii_space(c)) {
        ++pos_;
        continue;
      }
      if (c == '>') {
        ++pos_;
        return !self_closing;
      }
      if (c == '<') return false;
      if (c == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      self_closing = false;
      if (c == '"' || c == '\'') {
        // Stray quoted text where a name was expected; treat it as a value.
        read_value();
        continue;
      }
      if (c == '=') {
        ++pos_;
        skip_spaces();
        read_value();
        continue;
      }
      const std::string_view name = read_name();
      if (name.empty()) {
        pos_ += char_width(s_, pos_);
        continue;
      }
      append_words(name, out_);
      skip_spaces();
      if (peek(0) == '=') {
        ++pos_;
        skip_spaces();
        read_value();
      }
    }
    return false;
  }

  void skip_spaces() {
    while (pos_ < s_.size() && is_ascii_space(s_[pos_])) ++pos_;
  }

  void read_value() {
    if (pos_ >= s_.size()) return;
    const char quote = s_[pos_];
    if (quote == '"' || quote == '\'') {
      const std::size_t start = pos_ + 1;
      const std::size_t close = s_.find(quote, start);
      const std::size_t end = close == std::string_view::npos ? s_.size() : close;
      append_words(s_.substr(start, end - start), out_);
      pos_ = close == std::string_view::npos ? s_.size() : close + 1;
      return;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !is_ascii_space(s_[pos_]) && s_[pos_] != '>') ++pos_;
    append_words(s_.substr(start, pos_ - start), out_);
  }

  void read_raw_text(std::string_view name) {
    const std::string closing = "</" + std::string(name);
    const std::size_t close = s_.find(closing, pos_);
    const std::size_t end = close == std::string_view::npos ? s_.size() : close;
    append_words(s_.substr(pos_, end - pos_), out_);
    pos_ = end;
  }

  std::string_view s_;
  std::vector<std::string>& out_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string normalize_html(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::size_t pos = 0;
  while (pos < html.size()) {
    const std::size_t len = utf8_sequence_length(html, pos);
    if (len == 0) {
      out += kReplacement;
      ++pos;
      continue;
    }
    if (len == 1) {
      const char c = html[pos];
      out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else {
      out.append(html.substr(pos, len));
    }
    pos += len;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view html) {
  std::vector<std::string> tokens;
  if (html.empty()) return tokens;
  const std::string text = normalize_html(html);
  tokens.reserve(text.size() / 6);
  Lexer(text, tokens).run();
  return tokens;
}

TokenStream tokenize_sample(const Sample& sample) {
  return TokenStream{sample.id, tokenize(sample.html)};
}

}  // namespace phishkey
