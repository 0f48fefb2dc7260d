#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kpbench/csv.hpp"
#include "kpbench/error.hpp"
#include "kpbench/textproc.hpp"

namespace kpbench::corpus {

enum class Split { train, test };

inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct Document {
  std::string id;
  std::string abstract;
  std::vector<std::string> keyphrases;  // author order
  Split split = Split::train;
};

enum class Format { jsonl, csv };

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "jsonl") return Format::jsonl;
  if (s == "csv") return Format::csv;
  return std::nullopt;
}

struct LoadOptions {
  /// Drop empty keyphrases and normalized duplicates instead of rejecting the record.
  bool repair = false;
};

namespace detail {

inline Document validated(std::size_t record, std::string id, std::string abstract,
                          std::vector<std::string> keyphrases, std::string_view split,
                          const LoadOptions& opts) {
  if (id.empty()) throw ParseError(record, "empty id");
  const auto parsed_split = parse_split(split);
  if (!parsed_split) throw ParseError(record, "unknown split '" + std::string(split) + "'");
  if (utf8::trim(abstract).empty()) throw ParseError(record, "empty abstract");

  std::vector<std::string> phrases;
  std::set<std::string> seen;
  for (auto& k : keyphrases) {
    const std::string norm = utf8::normalize_space_lower(k);
    if (norm.empty()) {
      if (opts.repair) continue;
      throw ParseError(record, "empty keyphrase");
    }
    if (!seen.insert(norm).second) {
      if (opts.repair) continue;
      throw ParseError(record, "duplicate keyphrase '" + k + "'");
    }
    phrases.push_back(std::string(utf8::trim(k)));
  }
  return Document{std::move(id), std::move(abstract), std::move(phrases), *parsed_split};
}

inline std::vector<std::string> split_semicolons(std::string_view s) {
  std::vector<std::string> out;
  if (utf8::trim(s).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(';', pos);
    out.emplace_back(utf8::trim(s.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

/// Parses corpus text; file order is preserved and duplicate ids are rejected.
inline std::vector<Document> parse_corpus(std::string_view text, Format format,
                                          const LoadOptions& opts = {}) {
  std::vector<Document> docs;
  if (format == Format::jsonl) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      const std::string_view line = utf8::trim(text.substr(pos, eol - pos));
      pos = eol + 1;
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
      }
      try {
        std::vector<std::string> kps;
        for (const auto& k : j.at("keyphrases")) kps.push_back(k.get<std::string>());
        docs.push_back(detail::validated(line_no, j.at("id").get<std::string>(),
                                         j.at("abstract").get<std::string>(), std::move(kps),
                                         j.at("split").get<std::string>(), opts));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, std::string("bad record: ") + e.what());
      }
    }
  } else {
    const auto records = csv::parse(text);
    if (!records.empty()) {
      const auto& header = records.front().fields;
      const auto column = [&](std::string_view name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError(1, "missing column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - header.begin());
      };
      const std::size_t c_id = column("id");
      const std::size_t c_split = column("split");
      const std::size_t c_abs = column("abstract");
      const std::size_t c_kp = column("keyphrases");
      for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r].fields;
        if (f.size() != header.size())
          throw ParseError(records[r].line, "expected " + std::to_string(header.size()) +
                                                " fields, got " + std::to_string(f.size()));
        docs.push_back(detail::validated(records[r].line, f[c_id], f[c_abs],
                                         detail::split_semicolons(f[c_kp]), f[c_split], opts));
      }
    }
  }

  std::unordered_set<std::string> ids;
  for (const auto& d : docs)
    if (!ids.insert(d.id).second) throw IntegrityError("duplicate document id '" + d.id + "'");
  return docs;
}

inline std::vector<Document> load_corpus(const std::string& path, Format format,
                                         const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_corpus(text, format, opts);
}

inline std::string to_jsonl(const Document& d) {
  nlohmann::json j{{"id", d.id},
                   {"abstract", d.abstract},
                   {"keyphrases", d.keyphrases},
                   {"split", to_string(d.split)}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Presence classification

enum class Presence { present, absent };
enum class DocumentClass { present_only, absent_only, mixed };

inline std::string_view to_string(DocumentClass c) {
  switch (c) {
    case DocumentClass::present_only: return "present_only";
    case DocumentClass::absent_only: return "absent_only";
    default: return "mixed";
  }
}

struct PresenceLabel {
  std::vector<Presence> flags;  // parallel to Document::keyphrases
  DocumentClass document_class = DocumentClass::absent_only;
};

/// True iff `needle` occurs as a contiguous run inside `haystack`.
inline bool contains_contiguous(std::span<const std::string> haystack,
                                std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

/// A keyphrase is present iff its stem sequence occurs contiguously in the
/// abstract's stem sequence.
template <textproc::WordStemmer S = textproc::RussianStemmer>
PresenceLabel classify_presence(const Document& doc, const S& stemmer = {}) {
  const auto abstract_stems = textproc::stem_sequence(doc.abstract, stemmer);
  PresenceLabel label;
  std::size_t present = 0;
  for (const auto& k : doc.keyphrases) {
    const auto stems = textproc::stem_sequence(k, stemmer);
    const bool hit = contains_contiguous(abstract_stems, stems);
    label.flags.push_back(hit ? Presence::present : Presence::absent);
    present += hit;
  }
  if (!label.flags.empty() && present == label.flags.size())
    label.document_class = DocumentClass::present_only;
  else if (present == 0)
    label.document_class = DocumentClass::absent_only;
  else
    label.document_class = DocumentClass::mixed;
  return label;
}

// ---------------------------------------------------------------------------
// Statistics

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

struct CorpusStats {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  // Document classes over the train split.
  std::size_t present_only_count = 0;
  std::size_t absent_only_count = 0;
  std::size_t mixed_count = 0;
  // Over all documents.
  MeanStd avg_sentences;
  MeanStd avg_tokens;
  MeanStd avg_keyphrases;
  double absent_pct = 0.0;        // all documents
  double absent_pct_train = 0.0;
  double absent_pct_test = 0.0;
};

template <textproc::WordStemmer S = textproc::RussianStemmer>
CorpusStats compute_stats(std::span<const Document> corpus, const S& stemmer = {}) {
  CorpusStats st;
  std::vector<double> sentences, tokens, keyphrases;
  std::size_t absent[2] = {0, 0};
  std::size_t flags[2] = {0, 0};

  for (const auto& doc : corpus) {
    const int s = doc.split == Split::train ? 0 : 1;
    (s == 0 ? st.train_size : st.test_size) += 1;
    const auto label = classify_presence(doc, stemmer);
    if (doc.split == Split::train) {
      switch (label.document_class) {
        case DocumentClass::present_only: ++st.present_only_count; break;
        case DocumentClass::absent_only: ++st.absent_only_count; break;
        case DocumentClass::mixed: ++st.mixed_count; break;
      }
    }
    for (Presence p : label.flags) {
      ++flags[s];
      absent[s] += p == Presence::absent;
    }
    sentences.push_back(static_cast<double>(textproc::split_sentences(doc.abstract).size()));
    tokens.push_back(static_cast<double>(textproc::tokenize(doc.abstract, stemmer).size()));
    keyphrases.push_back(static_cast<double>(doc.keyphrases.size()));
  }

  const auto pct = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
  };
  st.avg_sentences = mean_std(sentences);
  st.avg_tokens = mean_std(tokens);
  st.avg_keyphrases = mean_std(keyphrases);
  st.absent_pct = pct(absent[0] + absent[1], flags[0] + flags[1]);
  st.absent_pct_train = pct(absent[0], flags[0]);
  st.absent_pct_test = pct(absent[1], flags[1]);
  return st;
}

inline nlohmann::json to_json(const CorpusStats& s) {
  const auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  return {{"train_size", s.train_size},
          {"test_size", s.test_size},
          {"present_only_count", s.present_only_count},
          {"absent_only_count", s.absent_only_count},
          {"mixed_count", s.mixed_count},
          {"avg_sentences", ms(s.avg_sentences)},
          {"avg_tokens", ms(s.avg_tokens)},
          {"avg_keyphrases", ms(s.avg_keyphrases)},
          {"absent_pct", s.absent_pct},
          {"absent_pct_train", s.absent_pct_train},
          {"absent_pct_test", s.absent_pct_test}};
}

}  // namespace kpbench::corpus
