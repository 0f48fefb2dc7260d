#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kpbench/config.hpp"
#include "kpbench/corpus.hpp"
#include "kpbench/extractors.hpp"
#include "kpbench/llmclient.hpp"
#include "kpbench/metrics.hpp"
#include "kpbench/promptkit.hpp"

namespace kpbench::runner {

namespace fs = std::filesystem;
using nlohmann::json;

enum class SystemKind { extractor, llm };

struct SystemConfig {
  SystemKind kind = SystemKind::extractor;
  std::string label;
  std::string method;  // extractor: "yake" or "rute"
  std::string model;   // llm model name
  std::optional<promptkit::StrategyKind> strategy;  // empty: zero-shot
  std::size_t n_examples = 3;
  std::optional<std::size_t> top_n;  // optional cut of parsed LLM output
  std::string endpoint_url;          // overrides [llm].endpoint_url
};

struct ExperimentConfig {
  std::string dataset;
  corpus::Format format = corpus::Format::jsonl;
  std::vector<SystemConfig> systems;
  std::vector<std::size_t> k_values{5, 10, 15};
  std::uint64_t seed = 42;
  std::optional<std::size_t> sample_limit;
  std::string output_dir = "results";
  std::optional<std::string> embedder_url;
  std::string template_path;  // empty: built-in Russian prompts
  promptkit::PoolMode pool_mode = promptkit::PoolMode::exclusive;
  std::size_t workers = 4;
  extractors::ExtractionConfig extraction;
  llm::GenerationConfig llm;

  void validate() const {
    if (dataset.empty()) throw ConfigError("dataset is required");
    if (systems.empty()) throw ConfigError("at least one system is required");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    for (const auto& s : systems) {
      if (s.kind == SystemKind::extractor) {
        if (s.method != "yake" && s.method != "rute")
          throw ConfigError("unknown extractor method '" + s.method + "'");
        if (k_values.empty()) throw ConfigError("k_values must be non-empty for extractors");
      } else {
        if (s.model.empty()) throw ConfigError("llm system '" + s.label + "' needs a model");
        if (s.strategy && s.n_examples < 1) throw ConfigError("n_examples must be >= 1");
      }
    }
    for (auto k : k_values)
      if (k < 1) throw ConfigError("k values must be >= 1");
    std::vector<std::string> labels;
    for (const auto& s : systems) {
      if (std::find(labels.begin(), labels.end(), s.label) != labels.end())
        throw ConfigError("duplicate system label '" + s.label + "'");
      labels.push_back(s.label);
    }
  }
};

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal().string();
}

inline std::string default_label(const SystemConfig& s) {
  if (s.kind == SystemKind::extractor) return s.method == "yake" ? "YAKE!" : "RuTermExtract";
  return s.model + " " + (s.strategy ? "few-shot " + std::string(to_string(*s.strategy))
                                     : std::string("zero-shot"));
}

}  // namespace detail

/// Builds a config from parsed TOML. Relative paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
  static const std::set<std::string> known{"dataset", "format",    "systems",  "k_values",
                                           "seed",    "sample_limit", "output", "embedder_url",
                                           "template", "pool_mode", "workers",  "extractor",
                                           "llm"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  c.dataset = detail::resolve(base_dir, detail::get_or<std::string>(j, "dataset", ""));
  const auto fmt = corpus::parse_format(detail::get_or<std::string>(j, "format", "jsonl"));
  if (!fmt) throw ConfigError("format must be jsonl or csv");
  c.format = *fmt;
  if (j.contains("k_values")) c.k_values = detail::get_or<std::vector<std::size_t>>(j, "k_values", {});
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("sample_limit")) c.sample_limit = detail::get_or<std::size_t>(j, "sample_limit", 0);
  c.output_dir = detail::resolve(base_dir, detail::get_or<std::string>(j, "output", c.output_dir));
  if (j.contains("embedder_url")) c.embedder_url = detail::get_or<std::string>(j, "embedder_url", "");
  c.template_path = detail::resolve(base_dir, detail::get_or<std::string>(j, "template", ""));
  const auto pool = detail::get_or<std::string>(j, "pool_mode", "exclusive");
  if (pool == "exclusive")
    c.pool_mode = promptkit::PoolMode::exclusive;
  else if (pool == "at_least_one")
    c.pool_mode = promptkit::PoolMode::at_least_one;
  else
    throw ConfigError("pool_mode must be exclusive or at_least_one");
  c.workers = detail::get_or<std::size_t>(j, "workers", c.workers);

  if (j.contains("extractor")) {
    const auto& e = j.at("extractor");
    c.extraction.max_ngram = detail::get_or<std::size_t>(e, "max_ngram", c.extraction.max_ngram);
    c.extraction.window = detail::get_or<std::size_t>(e, "window", c.extraction.window);
    c.extraction.dedup_threshold =
        detail::get_or<double>(e, "dedup_threshold", c.extraction.dedup_threshold);
  }
  if (j.contains("llm")) {
    const auto& l = j.at("llm");
    c.llm.endpoint_url = detail::get_or<std::string>(l, "endpoint_url", c.llm.endpoint_url);
    c.llm.path = detail::get_or<std::string>(l, "path", c.llm.path);
    c.llm.max_new_tokens = detail::get_or<int>(l, "max_new_tokens", c.llm.max_new_tokens);
    c.llm.temperature = detail::get_or<double>(l, "temperature", c.llm.temperature);
    c.llm.request_timeout = detail::get_or<double>(l, "request_timeout", c.llm.request_timeout);
    c.llm.max_retries = detail::get_or<int>(l, "max_retries", c.llm.max_retries);
    c.llm.concurrency_limit = detail::get_or<int>(l, "concurrency_limit", c.llm.concurrency_limit);
    c.llm.backoff_initial = detail::get_or<double>(l, "backoff_initial", c.llm.backoff_initial);
    c.llm.api_key_env = detail::get_or<std::string>(l, "api_key_env", c.llm.api_key_env);
  }

  if (j.contains("systems")) {
    if (!j.at("systems").is_array()) throw ConfigError("systems must be [[systems]] tables");
    for (const auto& s : j.at("systems")) {
      SystemConfig sys;
      const auto kind = detail::get_or<std::string>(s, "kind", "");
      if (kind == "extractor")
        sys.kind = SystemKind::extractor;
      else if (kind == "llm")
        sys.kind = SystemKind::llm;
      else
        throw ConfigError("system kind must be extractor or llm");
      sys.method = detail::get_or<std::string>(s, "method", "");
      sys.model = detail::get_or<std::string>(s, "model", "");
      const auto strategy = detail::get_or<std::string>(s, "strategy", "zero_shot");
      if (strategy != "zero_shot" && strategy != "zero-shot") {
        sys.strategy = promptkit::parse_strategy(strategy);
        if (!sys.strategy) throw ConfigError("unknown strategy '" + strategy + "'");
      }
      sys.n_examples = detail::get_or<std::size_t>(s, "n_examples", sys.n_examples);
      if (s.contains("top_n")) sys.top_n = detail::get_or<std::size_t>(s, "top_n", 0);
      sys.endpoint_url = detail::get_or<std::string>(s, "endpoint_url", "");
      sys.label = detail::get_or<std::string>(s, "label", "");
      if (sys.label.empty()) sys.label = detail::default_label(sys);
      c.systems.push_back(std::move(sys));
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(config::TomlLite::parse(text), fs::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Parallel map with an ordered result vector.

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// k sweep

struct MetricBest {
  double score = 0.0;
  std::size_t k = 0;
};

struct KRun {
  std::size_t k = 0;
  std::vector<KeyphraseList> predictions;  // parallel to the documents
  std::vector<metrics::MetricReport> reports;
  metrics::CorpusReport summary;
};

struct SweepResult {
  std::vector<KRun> runs;  // ascending k
  MetricBest f1;
  MetricBest rouge1;
  std::optional<MetricBest> bertscore;

  const KRun& run_for(std::size_t k) const {
    for (const auto& r : runs)
      if (r.k == k) return r;
    throw Error("no run for k=" + std::to_string(k));
  }
};

using ExtractFn = std::function<KeyphraseList(const corpus::Document&, std::size_t k)>;

/// Evaluates every k and keeps the best macro score per metric; ties go to the smallest k.
inline SweepResult sweep_k(const ExtractFn& extract, std::span<const corpus::Document> docs,
                           std::vector<std::size_t> k_values,
                           metrics::EmbeddingProvider* embedder = nullptr,
                           std::size_t workers = 1) {
  if (k_values.empty()) throw ConfigError("k_values must be non-empty");
  if (docs.empty()) throw Error("sweep_k: no documents");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());

  SweepResult out;
  for (std::size_t k : k_values) {
    KRun run;
    run.k = k;
    run.predictions.resize(docs.size());
    run.reports.resize(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t i) {
      run.predictions[i] = extract(docs[i], k);
      run.reports[i] =
          metrics::evaluate(docs[i].id, run.predictions[i], docs[i].keyphrases, embedder);
    });
    run.summary = metrics::aggregate(run.reports);
    out.runs.push_back(std::move(run));
  }

  const auto pick = [&](auto score_of) {
    MetricBest best{-1.0, 0};
    for (const auto& r : out.runs) {
      const double s = score_of(r.summary);
      if (s > best.score) best = {s, r.k};
    }
    return best;
  };
  out.f1 = pick([](const metrics::CorpusReport& c) { return c.f1_macro; });
  out.rouge1 = pick([](const metrics::CorpusReport& c) { return c.rouge1_macro; });
  const bool have_bert = std::all_of(out.runs.begin(), out.runs.end(), [](const KRun& r) {
    return r.summary.bertscore_macro.has_value();
  });
  if (have_bert)
    out.bertscore = pick([](const metrics::CorpusReport& c) { return *c.bertscore_macro; });

  for (const auto& r : out.runs) {
    if (r.summary.f1_macro > out.f1.score || r.summary.rouge1_macro > out.rouge1.score ||
        (out.bertscore && *r.summary.bertscore_macro > out.bertscore->score))
      throw Error("sweep_k: best score below an individual k");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results table

struct Row {
  std::string label;
  std::optional<double> bertscore;  // fractions in [0,1]
  double rouge1 = 0.0;
  double f1 = 0.0;
  double f1_micro = 0.0;
  std::size_t documents = 0;
  std::size_t failed = 0;
  std::optional<std::size_t> best_k_bertscore, best_k_rouge1, best_k_f1;

  bool complete() const { return failed == 0; }
};

struct ResultsTable {
  std::vector<Row> rows;
  std::uint64_t seed = 0;
  std::string dataset_hash;
};

inline std::string format_text(const ResultsTable& t) {
  std::size_t width = 6;
  for (const auto& r : t.rows) width = std::max(width, utf8::length(r.label) + (r.complete() ? 0 : 1));
  std::ostringstream out;
  const auto pad = [&](const std::string& s, std::size_t w) {
    return s + std::string(w > utf8::length(s) ? w - utf8::length(s) : 0, ' ');
  };
  out << pad("System", width) << "  " << pad("BERTScore", 9) << "  " << pad("ROUGE-1", 7) << "  "
      << "F1\n";
  bool incomplete = false;
  for (const auto& r : t.rows) {
    incomplete |= !r.complete();
    out << pad(r.label + (r.complete() ? "" : "*"), width) << "  "
        << pad(r.bertscore ? metrics::percent(*r.bertscore) : "n/a", 9) << "  "
        << pad(metrics::percent(r.rouge1), 7) << "  " << metrics::percent(r.f1) << "\n";
  }
  out << "\nResults, %. Macro averages over test documents; extractor rows show the best k per "
         "metric.\n";
  if (incomplete) out << "* incomplete: some documents failed; see results_table.json.\n";
  return out.str();
}

inline std::string format_csv(const ResultsTable& t) {
  std::ostringstream out;
  out << "system,bertscore,rouge1,f1,f1_micro,documents,failed,best_k_bertscore,best_k_rouge1,"
         "best_k_f1\n";
  const auto opt = [](const std::optional<std::size_t>& k) {
    return k ? std::to_string(*k) : std::string();
  };
  for (const auto& r : t.rows) {
    out << csv::escape(r.label) << ',' << (r.bertscore ? metrics::percent(*r.bertscore) : "")
        << ',' << metrics::percent(r.rouge1) << ',' << metrics::percent(r.f1) << ','
        << metrics::percent(r.f1_micro) << ',' << r.documents << ',' << r.failed << ','
        << opt(r.best_k_bertscore) << ',' << opt(r.best_k_rouge1) << ',' << opt(r.best_k_f1)
        << '\n';
  }
  return out.str();
}

inline json to_json(const ResultsTable& t) {
  json rows = json::array();
  json best_k = json::object();
  for (const auto& r : t.rows) {
    json row{{"system", r.label},
             {"bertscore", r.bertscore ? json(metrics::percent(*r.bertscore)) : json(nullptr)},
             {"rouge1", metrics::percent(r.rouge1)},
             {"f1", metrics::percent(r.f1)},
             {"f1_micro", metrics::percent(r.f1_micro)},
             {"documents", r.documents},
             {"failed", r.failed},
             {"complete", r.complete()}};
    rows.push_back(std::move(row));
    if (r.best_k_f1) {
      best_k[r.label] = {
          {"bertscore", r.best_k_bertscore ? json(*r.best_k_bertscore) : json(nullptr)},
          {"rouge1", *r.best_k_rouge1},
          {"f1", *r.best_k_f1}};
    }
  }
  return {{"rows", rows},
          {"metadata",
           {{"seed", t.seed}, {"dataset_hash", t.dataset_hash}, {"best_k", best_k},
            {"averaging", "macro over documents; f1_micro pools tp/fp/fn"}}}};
}

// ---------------------------------------------------------------------------
// Experiment

struct RunOptions {
  /// Read completions only from this cache; never contact the LLM endpoint.
  std::optional<std::string> replay_cache;
  /// Overrides the configured embedder (tests, stubs).
  metrics::EmbeddingProvider* embedder = nullptr;
  /// Emit progress lines here when set.
  std::ostream* log = nullptr;
};

struct RunResult {
  ResultsTable table;
  std::vector<json> per_doc;
  json info;
};

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return llm::prompt_hash(bytes);
}

namespace detail {

inline extractors::ExtractionConfig with_k(extractors::ExtractionConfig c, std::size_t k) {
  c.k = k;
  return c;
}

struct LlmDoc {
  KeyphraseList predicted;
  metrics::MetricReport report;
  json record;
  bool ok = false;
};

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  const auto all_docs = corpus::load_corpus(config.dataset, config.format);
  std::vector<corpus::Document> train, test;
  for (const auto& d : all_docs) (d.split == corpus::Split::train ? train : test).push_back(d);
  if (config.sample_limit && test.size() > *config.sample_limit) test.resize(*config.sample_limit);
  if (test.empty()) throw Error("no test documents in " + config.dataset);
  // Fold order: documents sorted by id.
  std::sort(test.begin(), test.end(),
            [](const corpus::Document& a, const corpus::Document& b) { return a.id < b.id; });

  std::unique_ptr<metrics::HttpEmbedder> http_embedder;
  metrics::EmbeddingProvider* embedder = options.embedder;
  if (!embedder && config.embedder_url) {
    http_embedder = std::make_unique<metrics::HttpEmbedder>(*config.embedder_url);
    embedder = http_embedder.get();
  }

  const auto tmpl = config.template_path.empty()
                        ? promptkit::PromptTemplate::russian_default()
                        : [&] {
                            std::ifstream in(config.template_path, std::ios::binary);
                            if (!in) throw ConfigError("cannot open template " + config.template_path);
                            const std::string text((std::istreambuf_iterator<char>(in)),
                                                   std::istreambuf_iterator<char>());
                            return promptkit::parse_template(text, config.template_path);
                          }();

  std::optional<promptkit::Pools> pools;
  const auto needs_pools = std::any_of(config.systems.begin(), config.systems.end(),
                                       [](const SystemConfig& s) { return s.strategy.has_value(); });
  if (needs_pools) pools = promptkit::build_pools(train, textproc::RussianStemmer{}, config.pool_mode);

  const bool replay = options.replay_cache.has_value();
  const bool any_llm = std::any_of(config.systems.begin(), config.systems.end(),
                                   [](const SystemConfig& s) { return s.kind == SystemKind::llm; });
  std::optional<llm::CompletionCache> cache;
  if (any_llm) {
    if (replay) {
      if (!fs::exists(*options.replay_cache))
        throw ConfigError("replay cache not found: " + *options.replay_cache);
      cache.emplace(*options.replay_cache);
    } else {
      fs::create_directories(config.output_dir);
      cache.emplace((fs::path(config.output_dir) / "completions_cache.jsonl").string());
    }
  }

  RunResult result;
  result.table.seed = config.seed;
  result.table.dataset_hash = file_hash(config.dataset);
  json systems_info = json::array();

  for (const auto& sys : config.systems) {
    if (options.log) *options.log << "system: " << sys.label << "\n";
    Row row;
    row.label = sys.label;
    row.documents = test.size();

    if (sys.kind == SystemKind::extractor) {
      const ExtractFn fn = [&](const corpus::Document& d, std::size_t k) {
        const auto cfg = detail::with_k(config.extraction, k);
        return sys.method == "yake" ? extractors::extract_yake(d.abstract, cfg)
                                    : extractors::extract_rute(d.abstract, cfg);
      };
      const auto sweep = sweep_k(fn, test, config.k_values, embedder, config.workers);
      row.f1 = sweep.f1.score;
      row.best_k_f1 = sweep.f1.k;
      row.f1_micro = sweep.run_for(sweep.f1.k).summary.f1_micro;
      row.rouge1 = sweep.rouge1.score;
      row.best_k_rouge1 = sweep.rouge1.k;
      if (sweep.bertscore) {
        row.bertscore = sweep.bertscore->score;
        row.best_k_bertscore = sweep.bertscore->k;
      }
      for (const auto& run : sweep.runs) {
        for (std::size_t i = 0; i < test.size(); ++i) {
          json rec = metrics::to_json(run.reports[i]);
          rec["system"] = sys.label;
          rec["k"] = run.k;
          rec["keyphrases"] = run.predictions[i];
          result.per_doc.push_back(std::move(rec));
        }
      }
      systems_info.push_back({{"system", sys.label}, {"documents", test.size()}, {"failed", 0}});
    } else {
      auto gen = config.llm;
      gen.model_name = sys.model;
      if (!sys.endpoint_url.empty()) gen.endpoint_url = sys.endpoint_url;
      std::unique_ptr<llm::LlmClient> client;
      if (!replay) client = std::make_unique<llm::LlmClient>(gen);

      std::vector<detail::LlmDoc> docs(test.size());
      parallel_for(test.size(), config.workers, [&](std::size_t i) {
        const auto& target = test[i];
        auto& out = docs[i];
        out.record = {{"system", sys.label}, {"doc_id", target.id}, {"k", nullptr}};
        try {
          promptkit::PromptSpec prompt;
          if (sys.strategy) {
            promptkit::FewShotStrategy strategy{*sys.strategy, sys.n_examples, config.seed};
            const auto& pool = pools->for_strategy(*sys.strategy);
            const auto examples = promptkit::select_examples(pool, strategy, target.id);
            prompt = promptkit::render_prompt(tmpl, target, examples, strategy);
          } else {
            prompt = promptkit::render_prompt(tmpl, target, {});
          }
          const auto completion = llm::cached_generate(client.get(), *cache, sys.model, prompt.rendered);
          out.predicted = llm::parse_keyphrases(completion.raw_text);
          if (sys.top_n && out.predicted.size() > *sys.top_n) out.predicted.resize(*sys.top_n);
          out.report = metrics::evaluate(target.id, out.predicted, target.keyphrases, embedder);
          out.record = metrics::to_json(out.report);
          out.record["system"] = sys.label;
          out.record["k"] = nullptr;
          out.record["keyphrases"] = out.predicted;
          out.record["prompt_hash"] = completion.prompt_id;
          out.record["example_ids"] = prompt.example_ids;
          if (completion.empty_choices) out.record["warning"] = "empty choices";
          out.ok = true;
        } catch (const Error& e) {
          out.record["error"] = e.what();
        }
      });

      std::vector<metrics::MetricReport> reports;
      std::size_t failed = 0;
      for (auto& d : docs) {
        if (d.ok)
          reports.push_back(d.report);
        else
          ++failed;
        result.per_doc.push_back(std::move(d.record));
      }
      row.failed = failed;
      if (!reports.empty()) {
        const auto summary = metrics::aggregate(reports);
        row.f1 = summary.f1_macro;
        row.f1_micro = summary.f1_micro;
        row.rouge1 = summary.rouge1_macro;
        row.bertscore = summary.bertscore_macro;
      }
      systems_info.push_back(
          {{"system", sys.label}, {"documents", test.size()}, {"failed", failed}});
      if (options.log && failed)
        *options.log << "  " << failed << " of " << test.size() << " documents failed\n";
    }
    result.table.rows.push_back(std::move(row));
  }

  result.info = {{"timestamp", llm::utc_timestamp()},
                 {"dataset", config.dataset},
                 {"test_documents", test.size()},
                 {"replay", replay},
                 {"systems", systems_info}};
  return result;
}

/// Writes results_table.{txt,csv,json}, per_doc.jsonl and run_info.json. The
/// table files depend only on inputs, cache and seed; the timestamp lives in
/// run_info.json.
inline void write_outputs(const RunResult& r, const std::string& dir,
                          const std::optional<std::string>& replay_cache = std::nullopt) {
  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (fs::path(dir) / name).string());
    out << content;
  };
  write("results_table.txt", format_text(r.table));
  write("results_table.csv", format_csv(r.table));
  write("results_table.json", to_json(r.table).dump(2) + "\n");
  std::string lines;
  for (const auto& rec : r.per_doc) lines += rec.dump() + "\n";
  write("per_doc.jsonl", lines);
  write("run_info.json", r.info.dump(2) + "\n");
  if (replay_cache) {
    const auto target = fs::path(dir) / "completions_cache.jsonl";
    if (!fs::exists(target) || !fs::equivalent(*replay_cache, target))
      fs::copy_file(*replay_cache, target, fs::copy_options::overwrite_existing);
  }
}

}  // namespace kpbench::runner
