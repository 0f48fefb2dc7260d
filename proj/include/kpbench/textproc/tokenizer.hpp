#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "kpbench/textproc/stemmer.hpp"
#include "kpbench/textproc/stopwords.hpp"
#include "kpbench/textproc/utf8.hpp"

namespace kpbench::textproc {

/// Byte range [begin, end) into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::string_view slice(std::string_view text) const { return text.substr(begin, end - begin); }
  bool operator==(const Span&) const = default;
};

struct Token {
  std::string surface;
  std::string lower;
  /// Hyphenated words keep one token; their component stems are joined with '-'.
  std::string stem;
  std::size_t char_offset = 0;  // byte offset into the source
  std::size_t sentence_index = 0;
  bool is_stopword = false;
  bool is_word = false;
};

namespace detail {

inline bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'…'; }

inline bool is_closing(char32_t c) {
  return c == U')' || c == U']' || c == U'»' || c == U'"' || c == U'\'' || c == U'”' ||
         c == U'’';
}

inline bool is_opening(char32_t c) {
  return c == U'(' || c == U'[' || c == U'«' || c == U'"' || c == U'“' || c == U'\'';
}

inline bool is_joiner(char32_t c) {
  return c == U'-' || c == U'‐' || c == U'‑' || c == U'\'' || c == U'’';
}

// Lowercase forms, without the final period, that never end a sentence.
inline constexpr std::array<std::string_view, 22> kAbbreviations{
    "т.е", "т.д", "т.п", "т.к", "т.н", "т.ч", "др", "рис", "см", "напр", "табл", "стр",
    "гл", "ср", "проф", "акад", "им", "г", "гг", "вв", "e.g", "i.e",
};

// The word-ish run that ends right before `dot`, e.g. "т.д" in "и т.д.".
inline std::string_view word_before(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0) {
    std::size_t prev = begin - 1;
    while (prev > 0 && (static_cast<unsigned char>(text[prev]) & 0xC0) == 0x80) --prev;
    std::size_t p = prev;
    const char32_t c = utf8::next(text, p);
    if (!(utf8::is_alnum(c) || c == U'.')) break;
    begin = prev;
  }
  return text.substr(begin, dot - begin);
}

inline bool is_guarded(std::string_view text, std::size_t dot) {
  const std::string_view word = word_before(text, dot);
  if (word.empty()) return false;
  const std::string lower = utf8::to_lower(word);
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end())
    return true;
  // Initials such as "А. С. Пушкин".
  std::size_t p = 0;
  const char32_t first = utf8::next(word, p);
  return p == word.size() && utf8::is_upper(first);
}

}  // namespace detail

/// Splits on ., !, ?, … followed by whitespace and an uppercase letter or digit.
/// Spans are trimmed of surrounding whitespace; blank input yields no spans.
inline std::vector<Span> split_sentences(std::string_view text) {
  std::vector<Span> spans;
  const auto push = [&](std::size_t b, std::size_t e) {
    const std::string_view t = utf8::trim(text.substr(b, e - b));
    if (t.empty()) return;
    const std::size_t tb = static_cast<std::size_t>(t.data() - text.data());
    spans.push_back({tb, tb + t.size()});
  };

  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t c = utf8::next(text, pos);
    if (!detail::is_terminal(c)) continue;
    if (c == U'.' && detail::is_guarded(text, at)) continue;

    std::size_t q = pos;
    while (q < text.size()) {
      std::size_t p = q;
      const char32_t d = utf8::next(text, p);
      if (!detail::is_terminal(d) && !detail::is_closing(d)) break;
      q = p;
    }
    if (q >= text.size()) break;

    std::size_t p = q;
    if (!utf8::is_space(utf8::next(text, p))) continue;
    std::size_t r = q;
    char32_t nextc = 0;
    while (r < text.size()) {
      std::size_t s = r;
      nextc = utf8::next(text, s);
      if (!utf8::is_space(nextc) && !detail::is_opening(nextc)) break;
      r = s;
    }
    if (r >= text.size()) break;
    if (utf8::is_upper(nextc) || utf8::is_digit(nextc)) {
      push(start, q);
      start = q;
      pos = q;
    }
  }
  push(start, text.size());
  return spans;
}

/// Component stems of a word surface; hyphen/apostrophe joiners separate components.
template <WordStemmer S>
std::vector<std::string> component_stems(std::string_view lower_word, const S& stemmer) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  std::size_t pos = 0;
  while (pos < lower_word.size()) {
    const std::size_t at = pos;
    if (detail::is_joiner(utf8::next(lower_word, pos))) {
      if (at > begin) out.push_back(stemmer(lower_word.substr(begin, at - begin)));
      begin = pos;
    }
  }
  if (lower_word.size() > begin) out.push_back(stemmer(lower_word.substr(begin)));
  return out;
}

/// Word tokens are alphanumeric runs (internal hyphens and apostrophes kept);
/// every other non-space code point becomes its own punctuation token.
template <WordStemmer S = RussianStemmer>
std::vector<Token> tokenize(std::string_view text, const S& stemmer = {},
                            const StopwordList& stopwords = StopwordList::russian()) {
  std::vector<Token> tokens;
  const std::vector<Span> sentences = split_sentences(text);
  std::size_t sentence = 0;

  const auto sentence_of = [&](std::size_t offset) {
    while (sentence + 1 < sentences.size() && offset >= sentences[sentence + 1].begin) ++sentence;
    return sentence;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t c = utf8::next(text, pos);
    if (utf8::is_space(c)) continue;

    Token tok;
    tok.char_offset = at;
    tok.sentence_index = sentence_of(at);
    if (utf8::is_alnum(c)) {
      std::size_t end = pos;
      while (end < text.size()) {
        std::size_t p = end;
        const char32_t d = utf8::next(text, p);
        if (utf8::is_alnum(d)) {
          end = p;
          continue;
        }
        if (detail::is_joiner(d) && p < text.size()) {
          std::size_t p2 = p;
          if (utf8::is_alnum(utf8::next(text, p2))) {
            end = p;
            continue;
          }
        }
        break;
      }
      pos = end;
      tok.surface = std::string(text.substr(at, end - at));
      tok.lower = utf8::to_lower(tok.surface);
      tok.is_word = true;
      tok.is_stopword = stopwords.contains(tok.lower);
      const auto parts = component_stems(tok.lower, stemmer);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) tok.stem += '-';
        tok.stem += parts[i];
      }
    } else {
      tok.surface = std::string(text.substr(at, pos - at));
      tok.lower = tok.surface;
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

/// Stems of all word tokens, hyphenated words expanded into their components.
template <WordStemmer S = RussianStemmer>
std::vector<std::string> stem_sequence(std::string_view text, const S& stemmer = {}) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(text, stemmer)) {
    if (!t.is_word) continue;
    for (auto& s : component_stems(t.lower, stemmer)) out.push_back(std::move(s));
  }
  return out;
}

/// Canonical matching key: lowercase word stems joined by single spaces.
template <WordStemmer S = RussianStemmer>
std::string lemma_key(std::string_view phrase, const S& stemmer = {}) {
  std::string key;
  for (const auto& s : stem_sequence(phrase, stemmer)) {
    if (!key.empty()) key += ' ';
    key += s;
  }
  return key;
}

}  // namespace kpbench::textproc
