// kpbench command-line driver.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kpbench/config.hpp"
#include "kpbench/corpus.hpp"
#include "kpbench/extractors/rute.hpp"
#include "kpbench/extractors/yake.hpp"
#include "kpbench/humaneval.hpp"
#include "kpbench/llmclient.hpp"
#include "kpbench/metrics.hpp"
#include "kpbench/promptkit.hpp"
#include "kpbench/runner.hpp"

using namespace kpbench;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// "-" means stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw Error("cannot write " + path);
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

corpus::Format format_of(const std::string& name, const std::string& path) {
  if (!name.empty()) {
    auto f = corpus::parse_format(name);
    if (!f) throw ConfigError("unknown format '" + name + "'");
    return *f;
  }
  return path.ends_with(".csv") ? corpus::Format::csv : corpus::Format::jsonl;
}

std::vector<corpus::Document> select_split(std::vector<corpus::Document> docs,
                                           const std::string& split) {
  if (split == "all") return docs;
  const auto want = corpus::parse_split(split);
  if (!want) throw ConfigError("split must be train, test or all");
  std::erase_if(docs, [&](const corpus::Document& d) { return d.split != *want; });
  return docs;
}

/// Reads {doc_id, keyphrases} lines. Lines carrying a "system" field are kept
/// only when it equals `system` (if given); lines with a numeric "k" only when
/// it equals `k` (if given).
std::map<std::string, KeyphraseList> load_predictions(const std::string& path,
                                                      const std::string& system = {},
                                                      std::optional<std::size_t> k = {}) {
  std::map<std::string, KeyphraseList> out;
  std::istringstream in(slurp(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(n, e.what());
    }
    if (!system.empty() && j.contains("system") && j["system"] != system) continue;
    if (j.contains("k") && j["k"].is_number() && k && j["k"].get<std::size_t>() != *k) continue;
    if (!j.contains("doc_id") || !j.contains("keyphrases"))
      throw ParseError(n, "expected doc_id and keyphrases");
    out[j["doc_id"].get<std::string>()] = j["keyphrases"].get<KeyphraseList>();
  }
  return out;
}

promptkit::PromptTemplate load_template(const std::string& path) {
  if (path.empty()) return promptkit::PromptTemplate::russian_default();
  auto t = promptkit::parse_template(slurp(path), path);
  t.validate();
  return t;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyphrase selection workbench for Russian scientific abstracts"};
  app.require_subcommand(1);

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics (sizes, presence classes, averages)");
  std::string stats_input, stats_format;
  stats->add_option("--input,-i", stats_input, "Corpus file")->required();
  stats->add_option("--format", stats_format, "jsonl or csv (default: by extension)");

  // extract
  auto* extract = app.add_subcommand("extract", "Run an unsupervised extractor");
  std::string ex_method, ex_input, ex_output = "-", ex_split = "test", ex_format;
  extractors::ExtractionConfig ex_cfg;
  extract->add_option("--method,-m", ex_method, "yake or rute")
      ->required()
      ->check(CLI::IsMember({"yake", "rute"}));
  extract->add_option("--k", ex_cfg.k, "Keyphrases per document")->capture_default_str();
  extract->add_option("--max-ngram", ex_cfg.max_ngram)->capture_default_str();
  extract->add_option("--window", ex_cfg.window, "YAKE co-occurrence window")->capture_default_str();
  extract->add_option("--dedup", ex_cfg.dedup_threshold, "YAKE dedup threshold")
      ->capture_default_str();
  extract->add_option("--input,-i", ex_input, "Corpus file")->required();
  extract->add_option("--format", ex_format);
  extract->add_option("--split", ex_split, "train, test or all")->capture_default_str();
  extract->add_option("--output,-o", ex_output, "JSONL output")->capture_default_str();

  // prompt
  auto* prompt = app.add_subcommand("prompt", "Render a prompt or dump the prompt template");
  std::string pr_input, pr_format, pr_doc, pr_strategy, pr_template, pr_pool = "exclusive";
  std::size_t pr_n = 3;
  std::uint64_t pr_seed = 42;
  bool pr_dump = false;
  prompt->add_flag("--dump-template", pr_dump, "Print the template file and exit");
  prompt->add_option("--template", pr_template, "Template file (default: built-in Russian)");
  prompt->add_option("--input,-i", pr_input, "Corpus file");
  prompt->add_option("--format", pr_format);
  prompt->add_option("--doc", pr_doc, "Target test document id");
  prompt->add_option("--strategy", pr_strategy, "random, present or absent (omit: zero-shot)");
  prompt->add_option("--n-examples", pr_n)->capture_default_str();
  prompt->add_option("--seed", pr_seed)->capture_default_str();
  prompt->add_option("--pool-mode", pr_pool)
      ->check(CLI::IsMember({"exclusive", "at_least_one"}))
      ->capture_default_str();

  // generate
  auto* generate = app.add_subcommand("generate", "Send one prompt to a chat-completions endpoint");
  llm::GenerationConfig gen_cfg;
  std::string gen_prompt_file = "-";
  generate->add_option("--endpoint", gen_cfg.endpoint_url, "Base URL")->required();
  generate->add_option("--model", gen_cfg.model_name)->required();
  generate->add_option("--path", gen_cfg.path)->capture_default_str();
  generate->add_option("--max-new-tokens", gen_cfg.max_new_tokens)->capture_default_str();
  generate->add_option("--temperature", gen_cfg.temperature)->capture_default_str();
  generate->add_option("--timeout", gen_cfg.request_timeout)->capture_default_str();
  generate->add_option("--retries", gen_cfg.max_retries)->capture_default_str();
  generate->add_option("--prompt-file", gen_prompt_file, "Prompt text (- for stdin)")
      ->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against gold keyphrases");
  std::string ev_pred, ev_gold, ev_format, ev_embedder, ev_system, ev_output = "-";
  std::optional<std::size_t> ev_k;
  eval->add_option("--pred,-p", ev_pred, "JSONL with doc_id and keyphrases")->required();
  eval->add_option("--gold,-g", ev_gold, "Corpus file")->required();
  eval->add_option("--format", ev_format);
  eval->add_option("--system", ev_system, "Keep only lines of this system (per_doc.jsonl)");
  eval->add_option("--k", ev_k, "Keep only extractor lines of this k (per_doc.jsonl)");
  eval->add_option("--embedder", ev_embedder, "Embedding service base URL for BERTScore");
  eval->add_option("--output,-o", ev_output, "Per-document JSONL")->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Run a configured experiment and write the results table");
  std::string run_config, run_output;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_limit;
  std::optional<std::string> run_replay;
  bool run_quiet = false;
  run->add_option("--config,-c", run_config, "Experiment file")->required()->check(CLI::ExistingFile);
  run->add_option("--output,-o", run_output, "Output directory (overrides config)");
  run->add_option("--seed", run_seed);
  run->add_option("--sample-limit", run_limit, "Use only the first N test documents");
  run->add_option("--replay-cache", run_replay, "Answer LLM prompts only from this cache")
      ->check(CLI::ExistingFile);
  run->add_flag("--quiet,-q", run_quiet);

  // humaneval
  auto* he = app.add_subcommand("humaneval", "Blinded expert annotation study");
  he->require_subcommand(1);
  auto* he_sample = he->add_subcommand("sample", "Sample documents and create a study directory");
  std::string hs_test, hs_format, hs_store;
  std::vector<std::string> hs_systems, hs_experts;
  std::size_t hs_n = 100, hs_k = 10;
  std::uint64_t hs_seed = 42;
  he_sample->add_option("--corpus", hs_test, "Corpus file (test split is used)")->required();
  he_sample->add_option("--format", hs_format);
  he_sample->add_option("--system", hs_systems, "NAME=FILE, three times")->required()->expected(3);
  he_sample->add_option("--extractor-k", hs_k, "k of extractor lines in per_doc files")
      ->capture_default_str();
  he_sample->add_option("--experts", hs_experts, "Expert ids")->required()->delimiter(',');
  he_sample->add_option("--n", hs_n)->capture_default_str();
  he_sample->add_option("--seed", hs_seed)->capture_default_str();
  he_sample->add_option("--store", hs_store, "New study directory")->required();

  auto* he_serve = he->add_subcommand("serve", "Serve the annotation API");
  std::string sv_store, sv_host = "127.0.0.1", sv_token_env = "KPBENCH_ADMIN_TOKEN";
  int sv_port = 8080;
  he_serve->add_option("--store", sv_store)->required()->check(CLI::ExistingDirectory);
  he_serve->add_option("--host", sv_host)->capture_default_str();
  he_serve->add_option("--port", sv_port)->capture_default_str();
  he_serve->add_option("--admin-token-env", sv_token_env, "Env var holding the report token")
      ->capture_default_str();

  auto* he_report = he->add_subcommand("report", "Aggregate the marks of a study");
  std::string rp_store;
  he_report->add_option("--store", rp_store)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats) {
      const auto docs = corpus::load_corpus(stats_input, format_of(stats_format, stats_input));
      std::cout << corpus::to_json(corpus::compute_stats(docs)).dump(2) << '\n';
    } else if (*extract) {
      ex_cfg.validate();
      const auto docs =
          select_split(corpus::load_corpus(ex_input, format_of(ex_format, ex_input)), ex_split);
      Sink sink(ex_output);
      for (const auto& d : docs) {
        const auto kps = ex_method == "yake" ? extractors::extract_yake(d.abstract, ex_cfg)
                                             : extractors::extract_rute(d.abstract, ex_cfg);
        sink.out() << json{{"doc_id", d.id}, {"keyphrases", kps}}.dump() << '\n';
      }
    } else if (*prompt) {
      const auto tmpl = load_template(pr_template);
      if (pr_dump) {
        std::cout << promptkit::dump_template(tmpl);
        return 0;
      }
      if (pr_input.empty() || pr_doc.empty())
        throw ConfigError("--input and --doc are required unless --dump-template is given");
      const auto docs = corpus::load_corpus(pr_input, format_of(pr_format, pr_input));
      const auto target = std::find_if(docs.begin(), docs.end(),
                                       [&](const corpus::Document& d) { return d.id == pr_doc; });
      if (target == docs.end()) throw ConfigError("no document '" + pr_doc + "'");
      promptkit::PromptSpec spec;
      if (pr_strategy.empty()) {
        spec = promptkit::render_prompt(tmpl, *target, {});
      } else {
        const auto kind = promptkit::parse_strategy(pr_strategy);
        if (!kind) throw ConfigError("unknown strategy '" + pr_strategy + "'");
        const auto train = select_split(docs, "train");
        const auto pools = promptkit::build_pools(
            std::span<const corpus::Document>(train), textproc::RussianStemmer{},
            pr_pool == "exclusive" ? promptkit::PoolMode::exclusive
                                   : promptkit::PoolMode::at_least_one);
        const promptkit::FewShotStrategy strategy{*kind, pr_n, pr_seed};
        const auto examples =
            promptkit::select_examples(pools.for_strategy(*kind), strategy, target->id);
        spec = promptkit::render_prompt(tmpl, *target, examples, strategy);
      }
      std::cout << spec.rendered << '\n';
      if (!spec.example_ids.empty()) {
        std::cerr << "examples:";
        for (const auto& id : spec.example_ids) std::cerr << ' ' << id;
        std::cerr << '\n';
      }
    } else if (*generate) {
      llm::LlmClient client(gen_cfg);
      const std::string text = slurp(gen_prompt_file);
      const auto c = client.generate(std::string_view(text));
      std::cout << json{{"raw_text", c.raw_text},
                        {"keyphrases", llm::parse_keyphrases(c.raw_text)},
                        {"prompt_id", c.prompt_id},
                        {"latency_ms", c.latency_ms},
                        {"attempt", c.attempt},
                        {"empty_choices", c.empty_choices}}
                       .dump(2)
                << '\n';
    } else if (*eval) {
      const auto gold = corpus::load_corpus(ev_gold, format_of(ev_format, ev_gold));
      const auto pred = load_predictions(ev_pred, ev_system, ev_k);
      std::unique_ptr<metrics::HttpEmbedder> embedder;
      if (!ev_embedder.empty()) embedder = std::make_unique<metrics::HttpEmbedder>(ev_embedder);
      std::vector<metrics::MetricReport> reports;
      Sink sink(ev_output);
      std::size_t missing = 0;
      for (const auto& d : gold) {
        const auto it = pred.find(d.id);
        if (it == pred.end()) {
          missing += d.split == corpus::Split::test;
          continue;
        }
        reports.push_back(metrics::evaluate(d.id, it->second, d.keyphrases, embedder.get()));
        sink.out() << metrics::to_json(reports.back()).dump() << '\n';
      }
      if (reports.empty()) throw Error("no predictions match documents in " + ev_gold);
      auto summary = metrics::to_json(metrics::aggregate(reports));
      summary["test_documents_without_prediction"] = missing;
      std::cerr << summary.dump(2) << '\n';
    } else if (*run) {
      auto config = runner::load_config(run_config);
      if (run_seed) config.seed = *run_seed;
      if (run_limit) config.sample_limit = *run_limit;
      if (!run_output.empty()) config.output_dir = run_output;
      runner::RunOptions opts;
      opts.replay_cache = run_replay;
      if (!run_quiet) opts.log = &std::cerr;
      const auto result = runner::run_experiment(config, opts);
      runner::write_outputs(result, config.output_dir, run_replay);
      std::cout << runner::format_text(result.table);
      std::size_t failed = 0;
      for (const auto& row : result.table.rows) failed += row.failed;
      if (failed) {
        std::cerr << failed << " document(s) failed; see " << config.output_dir
                  << "/per_doc.jsonl\n";
        return 3;
      }
    } else if (*he_sample) {
      const auto test = select_split(corpus::load_corpus(hs_test, format_of(hs_format, hs_test)),
                                     "test");
      humaneval::SystemOutputs outputs;
      for (const auto& spec : hs_systems) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--system expects NAME=FILE");
        const std::string name = spec.substr(0, eq);
        auto preds = load_predictions(spec.substr(eq + 1), name, hs_k);
        if (preds.empty()) throw ConfigError("no outputs for system '" + name + "'");
        outputs[name] = std::move(preds);
      }
      const auto set = humaneval::sample_eval_set(test, outputs, hs_n, hs_seed);
      for (const auto& id : set.resampled)
        std::cerr << "resampled: " << id << " lacks an output\n";
      humaneval::HumanEvalStore::create(hs_store, set, hs_experts, hs_seed);
      std::cout << set.tasks.size() << " tasks for " << set.doc_ids.size() << " documents in "
                << hs_store << '\n';
    } else if (*he_serve) {
      humaneval::HumanEvalStore store(sv_store);
      const char* token = std::getenv(sv_token_env.c_str());
      if (!token || !*token)
        std::cerr << "warning: " << sv_token_env << " is unset; /api/report is disabled\n";
      httplib::Server server;
      humaneval::install_routes(server, store, token ? token : "");
      static httplib::Server* running = &server;
      std::signal(SIGINT, [](int) { running->stop(); });
      std::signal(SIGTERM, [](int) { running->stop(); });
      std::cerr << "serving " << store.tasks().size() << " tasks on http://" << sv_host << ':'
                << sv_port << '\n';
      if (!server.listen(sv_host, sv_port)) throw Error("cannot listen on port " +
                                                        std::to_string(sv_port));
    } else if (*he_report) {
      humaneval::HumanEvalStore store(rp_store);
      std::cout << humaneval::to_json(store.report()).dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
