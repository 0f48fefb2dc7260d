#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kpbench/error.hpp"
#include "kpbench/extractors/common.hpp"
#include "kpbench/promptkit.hpp"
#include "kpbench/textproc.hpp"

namespace kpbench::metrics {

struct F1Components {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

struct MetricReport {
  std::string doc_id;
  F1Components f1_full;
  PRF rouge1;
  std::optional<PRF> bertscore;  // absent without an embedder, or if it failed
  std::string warning;
};

/// a / b with 0/0 (and x/0) defined as 0.
inline double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline double harmonic(double p, double r) { return ratio(2.0 * p * r, p + r); }

/// Set-level F1 over lemma keys.
template <textproc::WordStemmer S = textproc::RussianStemmer>
F1Components fullmatch_f1(std::span<const std::string> pred, std::span<const std::string> gold,
                          const S& stemmer = {}) {
  const auto keys = [&](std::span<const std::string> xs) {
    std::set<std::string> out;
    for (const auto& x : xs) {
      auto k = textproc::lemma_key(x, stemmer);
      if (!k.empty()) out.insert(std::move(k));
    }
    return out;
  };
  const auto p = keys(pred);
  const auto g = keys(gold);
  F1Components c;
  for (const auto& k : p) (g.count(k) ? c.tp : c.fp) += 1;
  c.fn = g.size() - c.tp;
  c.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  c.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  c.f1 = ratio(2.0 * static_cast<double>(c.tp), static_cast<double>(2 * c.tp + c.fp + c.fn));
  return c;
}

/// Lowercase word unigrams of the ", "-joined list; no stemming.
inline std::vector<std::string> unigrams(std::span<const std::string> phrases) {
  const std::string joined = promptkit::join_keyphrases(phrases);
  std::vector<std::string> out;
  for (const auto& tok : textproc::tokenize(joined, textproc::RussianStemmer{},
                                            textproc::StopwordList::russian()))
    if (tok.is_word) out.push_back(tok.lower);
  return out;
}

/// ROUGE-1 with clipped multiset overlap.
inline PRF rouge1(std::span<const std::string> pred, std::span<const std::string> gold) {
  const auto p = unigrams(pred);
  const auto g = unigrams(gold);
  std::map<std::string, std::size_t> gc;
  for (const auto& w : g) ++gc[w];
  std::size_t overlap = 0;
  std::map<std::string, std::size_t> pc;
  for (const auto& w : p) ++pc[w];
  for (const auto& [w, n] : pc) {
    const auto it = gc.find(w);
    if (it != gc.end()) overlap += std::min(n, it->second);
  }
  PRF r;
  r.precision = ratio(static_cast<double>(overlap), static_cast<double>(p.size()));
  r.recall = ratio(static_cast<double>(overlap), static_cast<double>(g.size()));
  r.f = harmonic(r.precision, r.recall);
  return r;
}

// ---------------------------------------------------------------------------
// BERTScore

struct Embedding {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(std::string_view text) = 0;
};

/// Test stub: one orthogonal unit vector per distinct lowercase word.
class OneHotEmbedder final : public EmbeddingProvider {
 public:
  explicit OneHotEmbedder(std::size_t dimension = 4096) : dim_(dimension) {}

  Embedding embed(std::string_view text) override {
    Embedding e;
    std::lock_guard lock(mu_);
    for (const auto& tok : textproc::tokenize(text, textproc::RussianStemmer{},
                                              textproc::StopwordList::russian())) {
      if (!tok.is_word) continue;
      auto [it, fresh] = index_.try_emplace(tok.lower, index_.size());
      if (it->second >= dim_) throw Error("one-hot embedder vocabulary exhausted");
      std::vector<double> v(dim_, 0.0);
      v[it->second] = 1.0;
      e.tokens.push_back(tok.lower);
      e.vectors.push_back(std::move(v));
    }
    return e;
  }

 private:
  std::size_t dim_;
  std::mutex mu_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Client for an embedding service: POST {path} {"text"} -> {"tokens", "vectors"}.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  explicit HttpEmbedder(std::string base_url, std::string path = "/embed", double timeout = 60.0)
      : base_(std::move(base_url)), path_(std::move(path)), timeout_(timeout) {}

  Embedding embed(std::string_view text) override {
    httplib::Client client(base_);
    const auto t = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(timeout_));
    client.set_connection_timeout(t);
    client.set_read_timeout(t);
    auto res = client.Post(path_, nlohmann::json{{"text", text}}.dump(), "application/json");
    if (!res) throw TransportError(0, "embedder: " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError(res->status, "embedder: HTTP " +
                                                                  std::to_string(res->status));
    Embedding e;
    try {
      const auto j = nlohmann::json::parse(res->body);
      e.tokens = j.at("tokens").get<std::vector<std::string>>();
      e.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& ex) {
      throw ProtocolError(std::string("embedder: ") + ex.what());
    }
    if (e.tokens.size() != e.vectors.size())
      throw ProtocolError("embedder: token and vector counts differ");
    for (const auto& v : e.vectors)
      if (v.size() != e.vectors.front().size())
        throw ProtocolError("embedder: ragged vectors");
    return e;
  }

 private:
  std::string base_;
  std::string path_;
  double timeout_;
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ProtocolError("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return na == 0.0 || nb == 0.0 ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Greedy matching score over two embedded token sequences: each token takes
/// its best cosine against the other side. No IDF weights, no rescaling.
inline PRF greedy_match(const Embedding& pred, const Embedding& gold) {
  PRF r;
  if (pred.vectors.empty() || gold.vectors.empty()) return r;
  std::vector<double> best_for_gold(gold.vectors.size(), -1.0);
  double precision_sum = 0.0;
  for (const auto& p : pred.vectors) {
    double best = -1.0;
    for (std::size_t j = 0; j < gold.vectors.size(); ++j) {
      const double s = cosine(p, gold.vectors[j]);
      best = std::max(best, s);
      best_for_gold[j] = std::max(best_for_gold[j], s);
    }
    precision_sum += best;
  }
  double recall_sum = 0.0;
  for (double s : best_for_gold) recall_sum += s;
  r.precision = precision_sum / static_cast<double>(pred.vectors.size());
  r.recall = recall_sum / static_cast<double>(gold.vectors.size());
  r.f = harmonic(r.precision, r.recall);
  return r;
}

inline PRF bertscore(std::span<const std::string> pred, std::span<const std::string> gold,
                     EmbeddingProvider& provider) {
  if (pred.empty() || gold.empty()) return {};
  return greedy_match(provider.embed(promptkit::join_keyphrases(pred)),
                      provider.embed(promptkit::join_keyphrases(gold)));
}

// ---------------------------------------------------------------------------
// Per-document and corpus reports

template <textproc::WordStemmer S = textproc::RussianStemmer>
MetricReport evaluate(std::string doc_id, std::span<const std::string> pred,
                      std::span<const std::string> gold, EmbeddingProvider* provider = nullptr,
                      const S& stemmer = {}) {
  MetricReport r;
  r.doc_id = std::move(doc_id);
  r.f1_full = fullmatch_f1(pred, gold, stemmer);
  r.rouge1 = rouge1(pred, gold);
  if (provider) {
    try {
      r.bertscore = bertscore(pred, gold, *provider);
    } catch (const Error& e) {
      r.warning = std::string("bertscore unavailable: ") + e.what();
    }
  }
  return r;
}

struct CorpusReport {
  std::size_t documents = 0;
  double f1_macro = 0.0;
  double rouge1_macro = 0.0;
  std::optional<double> bertscore_macro;  // over documents that have it
  std::size_t bertscore_documents = 0;
  // Pooled over all documents.
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1_micro = 0.0;
};

inline CorpusReport aggregate(std::span<const MetricReport> reports) {
  if (reports.empty()) throw Error("aggregate: no reports");
  CorpusReport c;
  c.documents = reports.size();
  double f1 = 0, rouge = 0, bert = 0;
  for (const auto& r : reports) {
    f1 += r.f1_full.f1;
    rouge += r.rouge1.f;
    c.tp += r.f1_full.tp;
    c.fp += r.f1_full.fp;
    c.fn += r.f1_full.fn;
    if (r.bertscore) {
      bert += r.bertscore->f;
      ++c.bertscore_documents;
    }
  }
  const auto n = static_cast<double>(reports.size());
  c.f1_macro = f1 / n;
  c.rouge1_macro = rouge / n;
  if (c.bertscore_documents)
    c.bertscore_macro = bert / static_cast<double>(c.bertscore_documents);
  c.f1_micro = ratio(2.0 * static_cast<double>(c.tp), static_cast<double>(2 * c.tp + c.fp + c.fn));
  return c;
}

/// Fraction as a two-decimal percentage, e.g. 0.6913 -> "69.13".
inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

inline nlohmann::json to_json(const PRF& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f", p.f}};
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j{{"doc_id", r.doc_id},
                   {"f1_full",
                    {{"tp", r.f1_full.tp},
                     {"fp", r.f1_full.fp},
                     {"fn", r.f1_full.fn},
                     {"precision", r.f1_full.precision},
                     {"recall", r.f1_full.recall},
                     {"f1", r.f1_full.f1}}},
                   {"rouge1", to_json(r.rouge1)}};
  j["bertscore"] = r.bertscore ? to_json(*r.bertscore) : nlohmann::json(nullptr);
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

inline nlohmann::json to_json(const CorpusReport& c) {
  return {{"documents", c.documents},
          {"f1_macro", c.f1_macro},
          {"rouge1_macro", c.rouge1_macro},
          {"bertscore_macro", c.bertscore_macro ? nlohmann::json(*c.bertscore_macro) : nullptr},
          {"bertscore_documents", c.bertscore_documents},
          {"micro", {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"f1", c.f1_micro}}}};
}

}  // namespace kpbench::metrics
