#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "kpbench/error.hpp"
#include "kpbench/textproc.hpp"

namespace kpbench {

/// Ordered, deduplicated phrases; the common currency of extractors, parsers and metrics.
using KeyphraseList = std::vector<std::string>;

}  // namespace kpbench

namespace kpbench::extractors {

struct ExtractionConfig {
  std::size_t k = 10;
  std::size_t max_ngram = 3;
  std::size_t window = 1;
  double dedup_threshold = 0.9;

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (max_ngram < 1) throw ConfigError("max_ngram must be >= 1");
    if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0))
      throw ConfigError("dedup_threshold must be in (0, 1]");
  }
};

struct Candidate {
  std::vector<textproc::Token> tokens;
  std::string surface;  // lowercase phrase (YAKE) or normalized key (RuTE)
  double score = 0.0;
  std::size_t occurrences = 0;
  std::size_t first_position = 0;  // word-token index of the first occurrence
};

/// Levenshtein distance over code points.
inline std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// 1 - distance / max length; identical strings (including two empties) give 1.
inline double edit_similarity(std::string_view a, std::string_view b) {
  const auto ua = utf8::decode(a);
  const auto ub = utf8::decode(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(ua, ub)) / static_cast<double>(longest);
}

}  // namespace kpbench::extractors
