#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpbench/corpus.hpp"
#include "kpbench/error.hpp"

namespace kpbench::promptkit {

/// Prompt text with `{text}` / `{keyphrases}` slots.
struct PromptTemplate {
  std::string id;
  std::string zero_shot_body;
  std::string few_shot_header;
  std::string few_shot_example_block;
  std::string few_shot_query_block;

  /// The Russian prompts used for every reported run.
  static PromptTemplate russian_default() {
    return {
        "ru-default",
        "Сгенерируй ключевые слова для научной статьи по тексту аннотации. Ключевые слова "
        "выведи в одну строку через запятую.\nТекст аннотации: {text}",
        "Сгенерируй ключевые слова для научной статьи по тексту аннотации.\n",
        "Текст аннотации: {text}\nКлючевые слова: {keyphrases}\n",
        "Текст аннотации: {text}",
    };
  }

  /// English rendering of the same prompts, for reference and debugging.
  static PromptTemplate english_reference() {
    return {
        "en-reference",
        "Generate keyphrases for a scientific paper using the given abstract. Keyphrases are "
        "written in one line and separated by commas.\nAbstract: {text}",
        "Generate keyphrases for a scientific paper using the given abstract.\n",
        "Abstract: {text}\nKeyphrases: {keyphrases}\n",
        "Abstract: {text}",
    };
  }

  void validate() const;
};

namespace detail {

struct Piece {
  bool is_slot;
  std::string text;  // literal text or slot name
};

inline std::vector<Piece> split_slots(std::string_view body) {
  std::vector<Piece> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t open = body.find('{', pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = body.find('}', open);
    if (close == std::string_view::npos) break;
    if (open > pos) out.push_back({false, std::string(body.substr(pos, open - pos))});
    out.push_back({true, std::string(body.substr(open + 1, close - open - 1))});
    pos = close + 1;
  }
  if (pos < body.size()) out.push_back({false, std::string(body.substr(pos))});
  return out;
}

inline void check_slots(std::string_view section, std::string_view body,
                        std::initializer_list<std::string_view> required) {
  std::vector<std::string> seen;
  for (const auto& p : split_slots(body)) {
    if (!p.is_slot) continue;
    if (std::find(required.begin(), required.end(), p.text) == required.end())
      throw TemplateError("section [" + std::string(section) + "]: unknown slot {" + p.text + "}");
    seen.push_back(p.text);
  }
  for (auto name : required) {
    const auto n = std::count(seen.begin(), seen.end(), name);
    if (n != 1)
      throw TemplateError("section [" + std::string(section) + "]: slot {" + std::string(name) +
                          "} must appear exactly once, found " + std::to_string(n));
  }
}

/// Single-pass substitution: inserted values are never rescanned for slots.
inline std::string fill(std::string_view body, std::string_view text,
                        std::string_view keyphrases = {}) {
  std::string out;
  for (const auto& p : split_slots(body)) {
    if (!p.is_slot) {
      out += p.text;
    } else if (p.text == "text") {
      out += text;
    } else if (p.text == "keyphrases") {
      out += keyphrases;
    } else {
      throw TemplateError("unresolved slot {" + p.text + "}");
    }
  }
  return out;
}

}  // namespace detail

inline void PromptTemplate::validate() const {
  detail::check_slots("zero_shot", zero_shot_body, {"text"});
  detail::check_slots("few_shot_header", few_shot_header, {});
  detail::check_slots("few_shot_example", few_shot_example_block, {"text", "keyphrases"});
  detail::check_slots("few_shot_query", few_shot_query_block, {"text"});
}

inline constexpr std::string_view kSectionNames[] = {"zero_shot", "few_shot_header",
                                                     "few_shot_example", "few_shot_query"};

/// Template file: `[section]` header lines, each followed by the section body.
/// A body runs up to the next header line; its final line break belongs to
/// the file layout, so a body that must end in a newline is written with a
/// trailing blank line.
inline PromptTemplate parse_template(std::string_view text, std::string id = "custom") {
  PromptTemplate t;
  t.id = std::move(id);
  std::string* targets[] = {&t.zero_shot_body, &t.few_shot_header, &t.few_shot_example_block,
                            &t.few_shot_query_block};
  bool found[4] = {false, false, false, false};
  std::string* current = nullptr;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const bool last = eol == std::string_view::npos;
    if (last) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;

    bool header = false;
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      const std::string_view name = line.substr(1, line.size() - 2);
      for (int i = 0; i < 4; ++i) {
        if (name == kSectionNames[i]) {
          if (found[i]) throw TemplateError("duplicate section [" + std::string(name) + "]");
          if (current && !current->empty()) current->pop_back();
          current = targets[i];
          found[i] = true;
          header = true;
        }
      }
      if (!header) throw TemplateError("unknown section [" + std::string(name) + "]");
      continue;
    }
    if (!current) {
      if (utf8::trim(line).empty()) continue;
      throw TemplateError("text before the first section");
    }
    *current += line;
    *current += '\n';
  }
  if (current && !current->empty()) current->pop_back();
  for (int i = 0; i < 4; ++i)
    if (!found[i]) throw TemplateError("missing section [" + std::string(kSectionNames[i]) + "]");
  t.validate();
  return t;
}

inline std::string dump_template(const PromptTemplate& t) {
  std::string out;
  const std::string* bodies[] = {&t.zero_shot_body, &t.few_shot_header, &t.few_shot_example_block,
                                 &t.few_shot_query_block};
  for (int i = 0; i < 4; ++i) {
    out += "[" + std::string(kSectionNames[i]) + "]\n";
    out += *bodies[i];
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Example selection

enum class StrategyKind { random_all, present_only, absent_only };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::random_all: return "random";
    case StrategyKind::present_only: return "present";
    default: return "absent";
  }
}

inline std::optional<StrategyKind> parse_strategy(std::string_view s) {
  if (s == "random" || s == "random_all") return StrategyKind::random_all;
  if (s == "present" || s == "present_only") return StrategyKind::present_only;
  if (s == "absent" || s == "absent_only") return StrategyKind::absent_only;
  return std::nullopt;
}

struct FewShotStrategy {
  StrategyKind kind = StrategyKind::random_all;
  std::size_t n_examples = 3;
  std::uint64_t seed = 0;
};

/// How class-restricted pools are built from presence labels.
enum class PoolMode {
  exclusive,    // present-only / absent-only documents
  at_least_one  // documents with at least one present / absent keyphrase
};

struct Pools {
  std::vector<corpus::Document> all;
  std::vector<corpus::Document> present_only;
  std::vector<corpus::Document> absent_only;

  const std::vector<corpus::Document>& for_strategy(StrategyKind k) const {
    const auto& pool = k == StrategyKind::random_all     ? all
                       : k == StrategyKind::present_only ? present_only
                                                         : absent_only;
    if (pool.empty())
      throw ConfigError("example pool for strategy '" + std::string(to_string(k)) + "' is empty");
    return pool;
  }
};

template <textproc::WordStemmer S = textproc::RussianStemmer>
Pools build_pools(std::span<const corpus::Document> train, const S& stemmer = {},
                  PoolMode mode = PoolMode::exclusive) {
  if (train.empty()) throw ConfigError("training split is empty");
  Pools pools;
  for (const auto& doc : train) {
    pools.all.push_back(doc);
    const auto label = corpus::classify_presence(doc, stemmer);
    if (mode == PoolMode::exclusive) {
      if (label.document_class == corpus::DocumentClass::present_only)
        pools.present_only.push_back(doc);
      if (label.document_class == corpus::DocumentClass::absent_only)
        pools.absent_only.push_back(doc);
    } else {
      const auto has = [&](corpus::Presence p) {
        return std::find(label.flags.begin(), label.flags.end(), p) != label.flags.end();
      };
      if (has(corpus::Presence::present)) pools.present_only.push_back(doc);
      if (has(corpus::Presence::absent)) pools.absent_only.push_back(doc);
    }
  }
  return pools;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Unbiased draw from [0, bound) by rejection; mt19937_64 output is fully
/// specified, so this is identical on every platform.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

/// Seed of the per-target random stream.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view target_id) {
  return detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a64(target_id)));
}

/// Uniform sample without replacement of `n_examples` documents, excluding the
/// target. Depends only on (seed, target_id) and the pool contents.
inline std::vector<corpus::Document> select_examples(std::span<const corpus::Document> pool,
                                                     const FewShotStrategy& strategy,
                                                     std::string_view target_id) {
  if (strategy.n_examples < 1) throw ConfigError("n_examples must be >= 1");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].id != target_id) eligible.push_back(i);
  if (eligible.size() < strategy.n_examples)
    throw SelectionError("pool has " + std::to_string(eligible.size()) +
                         " eligible documents, need " + std::to_string(strategy.n_examples));

  std::mt19937_64 rng(substream_seed(strategy.seed, target_id));
  std::vector<corpus::Document> out;
  for (std::size_t i = 0; i < strategy.n_examples; ++i) {
    const std::size_t j = i + detail::bounded(rng, eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
    out.push_back(pool[eligible[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

struct PromptSpec {
  std::string rendered;
  std::optional<FewShotStrategy> strategy;  // empty: zero-shot
  std::vector<std::string> example_ids;
  std::string target_id;
};

inline std::string join_keyphrases(std::span<const std::string> kps) {
  std::string out;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    if (i) out += ", ";
    out += kps[i];
  }
  return out;
}

/// Zero-shot when `strategy` is empty (then `examples` must be empty), few-shot otherwise.
inline PromptSpec render_prompt(const PromptTemplate& tmpl, const corpus::Document& target,
                                std::span<const corpus::Document> examples,
                                std::optional<FewShotStrategy> strategy = std::nullopt) {
  tmpl.validate();
  PromptSpec spec;
  spec.target_id = target.id;
  spec.strategy = strategy;
  if (!strategy) {
    if (!examples.empty()) throw TemplateError("zero-shot prompt given examples");
    spec.rendered = detail::fill(tmpl.zero_shot_body, target.abstract);
    return spec;
  }
  if (examples.size() != strategy->n_examples)
    throw TemplateError("expected " + std::to_string(strategy->n_examples) + " examples, got " +
                        std::to_string(examples.size()));
  spec.rendered = detail::fill(tmpl.few_shot_header, {});
  for (const auto& ex : examples) {
    if (ex.id == target.id) throw TemplateError("target document used as its own example");
    if (std::find(spec.example_ids.begin(), spec.example_ids.end(), ex.id) !=
        spec.example_ids.end())
      throw TemplateError("duplicate example '" + ex.id + "'");
    spec.example_ids.push_back(ex.id);
    spec.rendered +=
        detail::fill(tmpl.few_shot_example_block, ex.abstract, join_keyphrases(ex.keyphrases));
  }
  spec.rendered += detail::fill(tmpl.few_shot_query_block, target.abstract);
  return spec;
}

}  // namespace kpbench::promptkit
