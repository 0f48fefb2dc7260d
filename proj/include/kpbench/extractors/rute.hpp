#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kpbench/extractors/common.hpp"

namespace kpbench::extractors {

/// Stopword-chunk frequency extractor with stem-based normalization.
///
/// Candidates are maximal runs of non-stopword word tokens, cut at punctuation
/// and stopwords and truncated to `max_ngram` tokens. Runs whose normalized
/// form (lemma key) coincides are pooled. Ranking: pooled count descending,
/// then earliest first occurrence, then key. The emitted phrase is the
/// normalized key itself, so outputs carry stem-truncated word forms.
template <textproc::WordStemmer S = textproc::RussianStemmer>
std::vector<Candidate> rank_rute(std::string_view text, const ExtractionConfig& config,
                                 const S& stemmer = {},
                                 const textproc::StopwordList& stopwords =
                                     textproc::StopwordList::russian()) {
  config.validate();
  const auto tokens = textproc::tokenize(text, stemmer, stopwords);

  std::map<std::string, Candidate> pooled;
  std::vector<const textproc::Token*> run;
  std::size_t run_start = 0;
  std::size_t word_position = 0;

  const auto flush = [&] {
    if (run.empty()) return;
    const std::size_t n = std::min(run.size(), config.max_ngram);
    std::string key;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& stem : textproc::component_stems(run[i]->lower, stemmer)) {
        if (!key.empty()) key += ' ';
        key += stem;
      }
    }
    auto [it, fresh] = pooled.try_emplace(key);
    Candidate& c = it->second;
    if (fresh) {
      for (std::size_t i = 0; i < n; ++i) c.tokens.push_back(*run[i]);
      c.surface = key;
      c.first_position = run_start;
    }
    c.occurrences += 1;
    run.clear();
  };

  std::size_t sentence = 0;
  for (const auto& tok : tokens) {
    if (tok.sentence_index != sentence) {
      flush();
      sentence = tok.sentence_index;
    }
    if (!tok.is_word || tok.is_stopword) {
      flush();
      if (tok.is_word) ++word_position;
      continue;
    }
    if (run.empty()) run_start = word_position;
    run.push_back(&tok);
    ++word_position;
  }
  flush();

  std::vector<Candidate> ranked;
  ranked.reserve(pooled.size());
  for (auto& [key, c] : pooled) {
    c.score = static_cast<double>(c.occurrences);
    ranked.push_back(std::move(c));
  }
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
    if (a.first_position != b.first_position) return a.first_position < b.first_position;
    return a.surface < b.surface;
  });
  if (ranked.size() > config.k) ranked.resize(config.k);
  return ranked;
}

template <textproc::WordStemmer S = textproc::RussianStemmer>
KeyphraseList extract_rute(std::string_view text, const ExtractionConfig& config,
                           const S& stemmer = {},
                           const textproc::StopwordList& stopwords =
                               textproc::StopwordList::russian()) {
  KeyphraseList out;
  for (auto& c : rank_rute(text, config, stemmer, stopwords)) out.push_back(std::move(c.surface));
  return out;
}

}  // namespace kpbench::extractors
