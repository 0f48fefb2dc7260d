#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kpbench/extractors/common.hpp"

namespace kpbench::extractors {

/// Per-term statistics and the derived YAKE! features.
struct YakeTerm {
  std::string key;  // lowercase surface
  bool stopword = false;
  double tf = 0;
  double tf_upper = 0;   // all-caps occurrences (acronyms)
  double tf_proper = 0;  // capitalized, not sentence-initial
  std::set<std::size_t> sentences;

  double w_case = 0;
  double w_pos = 0;
  double w_freq = 0;
  double w_rel = 0;
  double w_spread = 0;
  double h = 0;
};

struct YakeModel {
  std::vector<YakeTerm> terms;
  std::unordered_map<std::string, std::size_t> term_index;
  /// Every valid candidate with its score, sorted best first (ascending score).
  std::vector<Candidate> candidates;
  std::size_t sentence_count = 0;

  const YakeTerm* term(std::string_view key) const {
    const auto it = term_index.find(std::string(key));
    return it == term_index.end() ? nullptr : &terms[it->second];
  }
};

namespace detail {

enum class YakeTag { digit, unusual, acronym, proper, plain };

inline YakeTag yake_tag(std::string_view surface, std::size_t position_in_sentence) {
  bool has_digit = false;
  bool has_letter = false;
  bool has_lower = false;
  bool has_upper = false;
  std::size_t special = 0;
  char32_t first = 0;
  for (std::size_t pos = 0; pos < surface.size();) {
    const char32_t c = utf8::next(surface, pos);
    if (!first) first = c;
    if (utf8::is_digit(c)) {
      has_digit = true;
    } else if (utf8::is_letter(c)) {
      has_letter = true;
      (utf8::is_upper(c) ? has_upper : has_lower) = true;
    } else {
      ++special;
    }
  }
  if (has_digit && !has_letter) return YakeTag::digit;
  if ((has_digit && has_letter) || special > 1) return YakeTag::unusual;
  if (has_upper && !has_lower) return YakeTag::acronym;
  if (utf8::is_upper(first) && position_in_sentence > 0) return YakeTag::proper;
  return YakeTag::plain;
}

inline bool discarded(YakeTag t) { return t == YakeTag::digit || t == YakeTag::unusual; }

inline double median(const std::set<std::size_t>& xs) {
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

struct Occurrence {
  std::size_t term;
  YakeTag tag;
  const textproc::Token* token;
  std::size_t word_position;
};

}  // namespace detail

/// Builds the full YAKE! model: term features, co-occurrence graph, and scored
/// candidates. Terms are keyed by lowercase surface; stopwords are list
/// members or words with fewer than three letters.
inline YakeModel yake_model(std::string_view text, const ExtractionConfig& config,
                            const textproc::StopwordList& stopwords =
                                textproc::StopwordList::russian()) {
  config.validate();
  YakeModel model;
  const auto tokens = textproc::tokenize(text, textproc::RussianStemmer{}, stopwords);

  // Directed co-occurrence counts, (left, right) -> weight.
  std::map<std::pair<std::size_t, std::size_t>, double> edges;

  struct RawCandidate {
    std::vector<std::size_t> terms;
    std::vector<const textproc::Token*> first_tokens;
    bool valid = true;
    double tf = 0;
    std::size_t first_position = 0;
  };
  std::map<std::string, RawCandidate> raw;

  std::vector<detail::Occurrence> block;
  std::size_t current_sentence = static_cast<std::size_t>(-1);
  std::size_t position_in_sentence = 0;
  std::size_t word_position = 0;

  for (const auto& tok : tokens) {
    if (tok.sentence_index != current_sentence) {
      current_sentence = tok.sentence_index;
      position_in_sentence = 0;
      block.clear();
    }
    const std::size_t pis = position_in_sentence++;
    if (!tok.is_word) {
      block.clear();
      continue;
    }

    const auto tag = detail::yake_tag(tok.surface, pis);
    auto [it, inserted] = model.term_index.try_emplace(tok.lower, model.terms.size());
    if (inserted) {
      YakeTerm t;
      t.key = tok.lower;
      std::size_t letters = 0;
      for (std::size_t p = 0; p < tok.lower.size();)
        letters += utf8::is_alnum(utf8::next(tok.lower, p));
      t.stopword = stopwords.contains(tok.lower) || letters < 3;
      model.terms.push_back(std::move(t));
    }
    const std::size_t id = it->second;
    YakeTerm& term = model.terms[id];
    term.tf += 1;
    if (tag == detail::YakeTag::acronym) term.tf_upper += 1;
    if (tag == detail::YakeTag::proper) term.tf_proper += 1;
    term.sentences.insert(tok.sentence_index);

    if (!detail::discarded(tag)) {
      const std::size_t from = block.size() > config.window ? block.size() - config.window : 0;
      for (std::size_t w = from; w < block.size(); ++w)
        if (!detail::discarded(block[w].tag)) edges[{block[w].term, id}] += 1;
    }

    block.push_back({id, tag, &tok, word_position});
    const std::size_t max_len = std::min(config.max_ngram, block.size());
    for (std::size_t len = 1; len <= max_len; ++len) {
      const std::size_t begin = block.size() - len;
      std::string key;
      for (std::size_t i = begin; i < block.size(); ++i) {
        if (i > begin) key += ' ';
        key += model.terms[block[i].term].key;
      }
      auto [cit, fresh] = raw.try_emplace(key);
      RawCandidate& c = cit->second;
      if (fresh) {
        for (std::size_t i = begin; i < block.size(); ++i) {
          c.terms.push_back(block[i].term);
          c.first_tokens.push_back(block[i].token);
        }
        c.first_position = block[begin].word_position;
      }
      for (std::size_t i = begin; i < block.size(); ++i)
        if (detail::discarded(block[i].tag)) c.valid = false;
      c.tf += 1;
    }
    ++word_position;
  }

  model.sentence_count = tokens.empty() ? 0 : tokens.back().sentence_index + 1;

  // Term features.
  std::vector<double> content_tf;
  double max_tf = 0;
  for (const auto& t : model.terms) {
    max_tf = std::max(max_tf, t.tf);
    if (!t.stopword) content_tf.push_back(t.tf);
  }
  if (content_tf.empty()) return model;
  double avg_tf = 0;
  for (double x : content_tf) avg_tf += x;
  avg_tf /= static_cast<double>(content_tf.size());
  double var = 0;
  for (double x : content_tf) var += (x - avg_tf) * (x - avg_tf);
  const double std_tf = std::sqrt(var / static_cast<double>(content_tf.size()));

  std::vector<double> out_distinct(model.terms.size()), out_weight(model.terms.size());
  std::vector<double> in_distinct(model.terms.size()), in_weight(model.terms.size());
  for (const auto& [edge, weight] : edges) {
    out_distinct[edge.first] += 1;
    out_weight[edge.first] += weight;
    in_distinct[edge.second] += 1;
    in_weight[edge.second] += weight;
  }

  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    YakeTerm& t = model.terms[i];
    const double left = in_weight[i] > 0 ? in_distinct[i] / in_weight[i] : 0.0;
    const double right = out_weight[i] > 0 ? out_distinct[i] / out_weight[i] : 0.0;
    t.w_rel = (0.5 + left * (t.tf / max_tf)) + (0.5 + right * (t.tf / max_tf));
    t.w_freq = t.tf / (avg_tf + std_tf);
    t.w_spread = static_cast<double>(t.sentences.size()) / static_cast<double>(model.sentence_count);
    t.w_case = std::max(t.tf_upper, t.tf_proper) / (1.0 + std::log(t.tf));
    t.w_pos = std::log(std::log(3.0 + detail::median(t.sentences)));
    t.h = (t.w_pos * t.w_rel) / (t.w_case + t.w_freq / t.w_rel + t.w_spread / t.w_rel);
  }

  // Candidate scores: prod(H) / (tf * (1 + sum(H))). Interior stopwords weigh in
  // through the probability of the bigrams that link them to their neighbours.
  const auto edge_weight = [&](std::size_t a, std::size_t b) {
    const auto it = edges.find({a, b});
    return it == edges.end() ? 0.0 : it->second;
  };
  for (auto& [key, c] : raw) {
    if (!c.valid) continue;
    if (model.terms[c.terms.front()].stopword || model.terms[c.terms.back()].stopword) continue;
    double prod = 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
      const YakeTerm& t = model.terms[c.terms[i]];
      if (!t.stopword) {
        prod *= t.h;
        sum += t.h;
        continue;
      }
      const YakeTerm& prev = model.terms[c.terms[i - 1]];
      const YakeTerm& next = model.terms[c.terms[i + 1]];
      const double p_left = edge_weight(c.terms[i - 1], c.terms[i]) / prev.tf;
      const double p_right = edge_weight(c.terms[i], c.terms[i + 1]) / next.tf;
      const double p = p_left * p_right;
      prod *= 1.0 + (1.0 - p);
      sum -= 1.0 - p;
    }
    // Long stopword-heavy n-grams can drive the denominator to zero or below;
    // such candidates have no meaningful score.
    if (sum + 1.0 <= 0.0) continue;
    Candidate cand;
    cand.surface = key;
    for (const auto* tok : c.first_tokens) cand.tokens.push_back(*tok);
    cand.score = prod / ((sum + 1.0) * c.tf);
    cand.occurrences = static_cast<std::size_t>(c.tf);
    cand.first_position = c.first_position;
    model.candidates.push_back(std::move(cand));
  }
  std::sort(model.candidates.begin(), model.candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score < b.score;
              if (a.first_position != b.first_position) return a.first_position < b.first_position;
              return a.surface < b.surface;
            });
  return model;
}

/// Best-first YAKE! candidates after near-duplicate removal, at most k.
inline std::vector<Candidate> rank_yake(std::string_view text, const ExtractionConfig& config,
                                        const textproc::StopwordList& stopwords =
                                            textproc::StopwordList::russian()) {
  YakeModel model = yake_model(text, config, stopwords);
  std::vector<Candidate> kept;
  std::set<std::string> keys;
  for (auto& cand : model.candidates) {
    if (kept.size() >= config.k) break;
    const std::string lemma = textproc::lemma_key(cand.surface);
    if (keys.count(lemma)) continue;
    const bool near_duplicate = std::any_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      return edit_similarity(k.surface, cand.surface) >= config.dedup_threshold;
    });
    if (near_duplicate) continue;
    keys.insert(lemma);
    kept.push_back(std::move(cand));
  }
  return kept;
}

inline KeyphraseList extract_yake(std::string_view text, const ExtractionConfig& config,
                                  const textproc::StopwordList& stopwords =
                                      textproc::StopwordList::russian()) {
  KeyphraseList out;
  for (auto& c : rank_yake(text, config, stopwords)) out.push_back(std::move(c.surface));
  return out;
}

}  // namespace kpbench::extractors
