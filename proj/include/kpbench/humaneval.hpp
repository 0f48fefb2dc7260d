#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kpbench/corpus.hpp"
#include "kpbench/error.hpp"
#include "kpbench/extractors/common.hpp"
#include "kpbench/llmclient.hpp"
#include "kpbench/promptkit.hpp"

namespace kpbench::humaneval {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::string_view kAuthors = "authors";
inline constexpr std::array<std::string_view, 4> kCriteria{"grammar_mistakes", "redundancy",
                                                           "insufficiency", "generic_words"};

/// One keyphrase list to judge. `system` and `label` stay server-side.
struct AnnotationTask {
  std::string task_id;
  std::string doc_id;
  std::string abstract;
  KeyphraseList keyphrases;
  std::string label;   // blinded condition: systemA, systemB, systemC, authors
  std::string system;  // true identity
};

struct AnnotationMark {
  std::string task_id;
  std::string expert_id;
  std::array<bool, 4> criteria{};  // order of kCriteria
  std::string submitted_at;
};

/// Outputs per system: system name -> doc id -> keyphrases.
using SystemOutputs = std::map<std::string, std::map<std::string, KeyphraseList>>;

struct EvalSet {
  std::vector<AnnotationTask> tasks;
  std::vector<std::string> doc_ids;      // sampled, in sampling order
  std::vector<std::string> resampled;    // skipped for missing outputs
};

namespace detail {

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[promptkit::detail::bounded(rng, i)]);
}

}  // namespace detail

/// Samples `n` test documents and builds one task per (document, system) plus
/// the authors' list. Documents lacking any system output are skipped and the
/// next sampled document takes their place.
inline EvalSet sample_eval_set(std::span<const corpus::Document> test, const SystemOutputs& outputs,
                               std::size_t n, std::uint64_t seed) {
  if (outputs.size() != 3) throw ConfigError("exactly three systems are required");
  for (const auto& [name, _] : outputs)
    if (name == kAuthors) throw ConfigError("system name 'authors' is reserved");

  std::vector<const corpus::Document*> docs;
  for (const auto& d : test) docs.push_back(&d);
  std::sort(docs.begin(), docs.end(),
            [](const corpus::Document* a, const corpus::Document* b) { return a->id < b->id; });
  std::mt19937_64 rng(promptkit::substream_seed(seed, "humaneval:sample"));
  detail::shuffle(docs, rng);

  // Blinded labels follow the sorted system names.
  std::map<std::string, std::string> label_of;
  const char* labels[] = {"systemA", "systemB", "systemC"};
  std::size_t li = 0;
  for (const auto& [name, _] : outputs) label_of[name] = labels[li++];
  label_of[std::string(kAuthors)] = std::string(kAuthors);

  EvalSet set;
  std::set<std::string> task_ids;
  for (const auto* d : docs) {
    if (set.doc_ids.size() == n) break;
    bool complete = !d->keyphrases.empty();
    for (const auto& [name, per_doc] : outputs) {
      const auto it = per_doc.find(d->id);
      if (it == per_doc.end() || it->second.empty()) complete = false;
    }
    if (!complete) {
      set.resampled.push_back(d->id);
      continue;
    }
    set.doc_ids.push_back(d->id);
    std::vector<std::string> systems;
    for (const auto& [name, _] : outputs) systems.push_back(name);
    systems.emplace_back(kAuthors);
    detail::shuffle(systems, rng);  // file order must not reveal the condition
    for (const auto& sys : systems) {
      AnnotationTask t;
      do {
        t.task_id = "t" + detail::hex64(rng());
      } while (!task_ids.insert(t.task_id).second);
      t.doc_id = d->id;
      t.abstract = d->abstract;
      t.keyphrases = sys == kAuthors ? d->keyphrases : outputs.at(sys).at(d->id);
      t.system = sys;
      t.label = label_of.at(sys);
      set.tasks.push_back(std::move(t));
    }
  }
  if (set.doc_ids.size() < n)
    throw Error("only " + std::to_string(set.doc_ids.size()) + " documents have outputs from "
                "every system; " + std::to_string(n) + " requested");
  return set;
}

// ---------------------------------------------------------------------------
// Report

struct CriterionCount {
  std::size_t marked = 0;
  std::size_t true_count = 0;
  std::optional<double> fraction() const {
    if (marked == 0) return std::nullopt;
    return static_cast<double>(true_count) / static_cast<double>(marked);
  }
};

struct CriterionSummary {
  std::optional<double> mean;  // over experts with at least one mark
  std::optional<double> min, max;
  std::size_t experts = 0;
  std::optional<double> divergence() const {
    if (!min) return std::nullopt;
    return *max - *min;
  }
};

struct HumanEvalReport {
  // expert -> system -> criterion counts
  std::map<std::string, std::map<std::string, std::array<CriterionCount, 4>>> per_expert;
  std::map<std::string, std::array<CriterionSummary, 4>> per_system;
  std::map<std::string, std::pair<std::size_t, std::size_t>> coverage;  // marked, total
};

inline json to_json(const HumanEvalReport& r) {
  const auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  json experts = json::object();
  for (const auto& [expert, systems] : r.per_expert) {
    for (const auto& [sys, counts] : systems) {
      for (std::size_t c = 0; c < kCriteria.size(); ++c) {
        experts[expert][sys][std::string(kCriteria[c])] = {{"marked", counts[c].marked},
                                                           {"true", counts[c].true_count},
                                                           {"fraction", opt(counts[c].fraction())}};
      }
    }
  }
  json systems = json::object();
  for (const auto& [sys, crit] : r.per_system) {
    for (std::size_t c = 0; c < kCriteria.size(); ++c) {
      systems[sys][std::string(kCriteria[c])] = {{"mean", opt(crit[c].mean)},
                                                 {"min", opt(crit[c].min)},
                                                 {"max", opt(crit[c].max)},
                                                 {"divergence", opt(crit[c].divergence())},
                                                 {"experts", crit[c].experts}};
    }
  }
  json coverage = json::object();
  for (const auto& [expert, mt] : r.coverage)
    coverage[expert] = {{"marked", mt.first}, {"total", mt.second}};
  return {{"per_expert", experts}, {"per_system", systems}, {"coverage", coverage}};
}

/// Folds current marks (one per task and expert) into fractions.
inline HumanEvalReport aggregate_marks(const std::vector<AnnotationMark>& marks,
                                       const std::map<std::string, std::string>& system_of_task,
                                       const std::vector<std::string>& experts) {
  HumanEvalReport r;
  std::set<std::string> systems;
  for (const auto& [_, sys] : system_of_task) systems.insert(sys);
  for (const auto& e : experts) {
    r.coverage[e] = {0, system_of_task.size()};
    for (const auto& s : systems) r.per_expert[e][s];
  }
  for (const auto& m : marks) {
    const auto sys = system_of_task.find(m.task_id);
    if (sys == system_of_task.end()) throw ValidationError("mark for unknown task " + m.task_id);
    auto& counts = r.per_expert[m.expert_id][sys->second];
    for (std::size_t c = 0; c < kCriteria.size(); ++c) {
      ++counts[c].marked;
      counts[c].true_count += m.criteria[c];
    }
    ++r.coverage[m.expert_id].first;
  }
  for (const auto& s : systems) {
    auto& summary = r.per_system[s];
    for (std::size_t c = 0; c < kCriteria.size(); ++c) {
      double sum = 0;
      for (const auto& [expert, per_sys] : r.per_expert) {
        const auto f = per_sys.at(s)[c].fraction();
        if (!f) continue;
        sum += *f;
        ++summary[c].experts;
        summary[c].min = summary[c].min ? std::min(*summary[c].min, *f) : *f;
        summary[c].max = summary[c].max ? std::max(*summary[c].max, *f) : *f;
      }
      if (summary[c].experts) summary[c].mean = sum / static_cast<double>(summary[c].experts);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Store

inline AnnotationMark mark_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("mark must be a JSON object");
  AnnotationMark m;
  const auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
      throw ValidationError(std::string("missing or invalid '") + key + "'");
    return j[key].get<std::string>();
  };
  m.task_id = str("task_id");
  m.expert_id = str("expert_id");
  for (std::size_t c = 0; c < kCriteria.size(); ++c) {
    const std::string key(kCriteria[c]);
    if (!j.contains(key) || !j[key].is_boolean())
      throw ValidationError("criterion '" + key + "' must be true or false");
    m.criteria[c] = j[key].get<bool>();
  }
  if (j.contains("submitted_at") && j["submitted_at"].is_string())
    m.submitted_at = j["submitted_at"].get<std::string>();
  return m;
}

inline json to_json(const AnnotationMark& m) {
  json j{{"task_id", m.task_id}, {"expert_id", m.expert_id}, {"submitted_at", m.submitted_at}};
  for (std::size_t c = 0; c < kCriteria.size(); ++c) j[std::string(kCriteria[c])] = m.criteria[c];
  return j;
}

struct MarkAck {
  bool replaced = false;
  std::size_t history_length = 1;
};

/// Durable annotation state in a directory: tasks.jsonl (blinded tasks),
/// blinding.json (owner-only), session.json (experts, seed), marks.jsonl
/// (append-only; the last line per task and expert is current).
class HumanEvalStore {
 public:
  static void create(const fs::path& dir, const EvalSet& set, std::vector<std::string> experts,
                     std::uint64_t seed) {
    if (experts.empty()) throw ConfigError("at least one expert is required");
    std::sort(experts.begin(), experts.end());
    if (std::adjacent_find(experts.begin(), experts.end()) != experts.end())
      throw ConfigError("duplicate expert id");
    fs::create_directories(dir);
    if (fs::exists(dir / "tasks.jsonl") || fs::exists(dir / "marks.jsonl"))
      throw ConfigError("store already exists in " + dir.string());

    std::ofstream tasks(dir / "tasks.jsonl");
    json blinding = json::object();
    for (const auto& t : set.tasks) {
      tasks << task_payload(t).dump() << '\n';
      blinding[t.task_id] = {{"label", t.label}, {"system", t.system}};
    }
    {
      std::ofstream b(dir / "blinding.json");
      b << blinding.dump(2) << '\n';
    }
    fs::permissions(dir / "blinding.json", fs::perms::owner_read | fs::perms::owner_write,
                    fs::perm_options::replace);
    std::ofstream(dir / "session.json")
        << json{{"experts", experts}, {"seed", seed}, {"doc_ids", set.doc_ids}}.dump(2) << '\n';
    std::ofstream(dir / "marks.jsonl").close();
  }

  explicit HumanEvalStore(fs::path dir) : dir_(std::move(dir)) {
    const auto read = [&](const char* name) {
      std::ifstream in(dir_ / name, std::ios::binary);
      if (!in) throw ConfigError("cannot read " + (dir_ / name).string());
      return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    const auto session = json::parse(read("session.json"));
    experts_ = session.at("experts").get<std::vector<std::string>>();
    seed_ = session.at("seed").get<std::uint64_t>();
    const auto blinding = json::parse(read("blinding.json"));
    std::istringstream tasks(read("tasks.jsonl"));
    for (std::string line; std::getline(tasks, line);) {
      if (utf8::trim(line).empty()) continue;
      const auto j = json::parse(line);
      AnnotationTask t;
      t.task_id = j.at("task_id");
      t.doc_id = j.at("doc_id");
      t.abstract = j.at("abstract");
      t.keyphrases = j.at("keyphrases").get<KeyphraseList>();
      t.label = blinding.at(t.task_id).at("label");
      t.system = blinding.at(t.task_id).at("system");
      index_[t.task_id] = tasks_.size();
      tasks_.push_back(std::move(t));
    }
    for (const auto& e : experts_) order_[e] = display_order(e);
    std::istringstream marks(read("marks.jsonl"));
    std::size_t line_no = 0;
    for (std::string line; std::getline(marks, line);) {
      ++line_no;
      if (utf8::trim(line).empty()) continue;
      try {
        apply(mark_from_json(json::parse(line)));
      } catch (const std::exception& e) {
        throw ParseError(line_no, std::string("marks.jsonl: ") + e.what());
      }
    }
  }

  const std::vector<std::string>& experts() const { return experts_; }
  std::size_t task_count() const { return tasks_.size(); }
  const std::vector<AnnotationTask>& tasks() const { return tasks_; }

  /// Blinded payload: never carries the system identity or its label.
  static json task_payload(const AnnotationTask& t) {
    return {{"task_id", t.task_id},
            {"doc_id", t.doc_id},
            {"abstract", t.abstract},
            {"keyphrases", t.keyphrases}};
  }

  /// Next unmarked task in this expert's order, or nullopt when done.
  std::optional<json> next_task(const std::string& expert) const {
    std::shared_lock lock(mu_);
    const auto& order = order_of(expert);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& t = tasks_[order[i]];
      if (current_.count({t.task_id, expert})) continue;
      json p = task_payload(t);
      p["display_order"] = i + 1;
      p["total"] = order.size();
      return p;
    }
    return std::nullopt;
  }

  json progress(const std::string& expert) const {
    std::shared_lock lock(mu_);
    order_of(expert);
    std::size_t marked = 0;
    for (const auto& [key, _] : current_) marked += key.second == expert;
    return {{"expert_id", expert},
            {"marked", marked},
            {"total", tasks_.size()},
            {"remaining", tasks_.size() - marked}};
  }

  MarkAck record_mark(AnnotationMark m) {
    std::unique_lock lock(mu_);
    if (!index_.count(m.task_id)) throw ValidationError("unknown task '" + m.task_id + "'");
    if (!order_.count(m.expert_id)) throw ValidationError("unknown expert '" + m.expert_id + "'");
    if (m.submitted_at.empty()) m.submitted_at = llm::utc_timestamp();
    {
      std::ofstream out(dir_ / "marks.jsonl", std::ios::app);
      if (!out) throw Error("cannot append to marks.jsonl");
      out << to_json(m).dump() << '\n';
      out.flush();
      if (!out) throw Error("write to marks.jsonl failed");
    }
    return apply(std::move(m));
  }

  std::size_t history_length(const std::string& task_id, const std::string& expert) const {
    std::shared_lock lock(mu_);
    const auto it = history_.find({task_id, expert});
    return it == history_.end() ? 0 : it->second;
  }

  HumanEvalReport report() const {
    std::shared_lock lock(mu_);
    std::vector<AnnotationMark> marks;
    for (const auto& [_, m] : current_) marks.push_back(m);
    std::map<std::string, std::string> system_of;
    for (const auto& t : tasks_) system_of[t.task_id] = t.system;
    return aggregate_marks(marks, system_of, experts_);
  }

 private:
  using Key = std::pair<std::string, std::string>;  // task, expert

  MarkAck apply(AnnotationMark m) {
    const Key key{m.task_id, m.expert_id};
    MarkAck ack;
    ack.history_length = ++history_[key];
    ack.replaced = ack.history_length > 1;
    current_[key] = std::move(m);
    return ack;
  }

  std::vector<std::size_t> display_order(const std::string& expert) const {
    std::vector<std::size_t> order(tasks_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(promptkit::substream_seed(seed_, "humaneval:expert:" + expert));
    detail::shuffle(order, rng);
    return order;
  }

  const std::vector<std::size_t>& order_of(const std::string& expert) const {
    const auto it = order_.find(expert);
    if (it == order_.end()) throw ValidationError("unknown expert '" + expert + "'");
    return it->second;
  }

  fs::path dir_;
  std::vector<std::string> experts_;
  std::uint64_t seed_ = 0;
  std::vector<AnnotationTask> tasks_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> order_;
  std::map<Key, AnnotationMark> current_;
  std::map<Key, std::size_t> history_;
  mutable std::shared_mutex mu_;
};

// ---------------------------------------------------------------------------
// HTTP API

/// Registers the annotation API on `server`. The report endpoint requires
/// `Authorization: Bearer <admin_token>`; an empty token disables it.
inline void install_routes(httplib::Server& server, HumanEvalStore& store,
                           std::string admin_token) {
  const auto send = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Get(R"(/api/experts/([^/]+)/tasks/next)",
             [&store, send](const httplib::Request& req, httplib::Response& res) {
               const std::string expert = req.matches[1];
               try {
                 if (auto task = store.next_task(expert)) {
                   send(res, 200, *task);
                 } else {
                   auto p = store.progress(expert);
                   p["done"] = true;
                   send(res, 200, p);
                 }
               } catch (const ValidationError& e) {
                 send(res, 404, {{"error", e.what()}});
               }
             });

  server.Post("/api/marks", [&store, send](const httplib::Request& req, httplib::Response& res) {
    try {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        throw ValidationError("body is not valid JSON");
      }
      const auto ack = store.record_mark(mark_from_json(body));
      send(res, 201,
           {{"status", ack.replaced ? "updated" : "created"},
            {"history_length", ack.history_length}});
    } catch (const ValidationError& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const Error& e) {
      send(res, 500, {{"error", e.what()}});
    }
  });

  server.Get(R"(/api/progress/([^/]+))",
             [&store, send](const httplib::Request& req, httplib::Response& res) {
               try {
                 send(res, 200, store.progress(req.matches[1]));
               } catch (const ValidationError& e) {
                 send(res, 404, {{"error", e.what()}});
               }
             });

  server.Get("/api/report", [&store, send, admin_token](const httplib::Request& req,
                                                        httplib::Response& res) {
    if (admin_token.empty()) return send(res, 403, {{"error", "report endpoint disabled"}});
    if (req.get_header_value("Authorization") != "Bearer " + admin_token)
      return send(res, 401, {{"error", "admin token required"}});
    send(res, 200, to_json(store.report()));
  });
}

}  // namespace kpbench::humaneval
