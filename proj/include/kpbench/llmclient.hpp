#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kpbench/error.hpp"
#include "kpbench/extractors/common.hpp"
#include "kpbench/promptkit.hpp"
#include "kpbench/textproc/utf8.hpp"

namespace kpbench::llm {

struct GenerationConfig {
  std::string endpoint_url = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model_name;
  int max_new_tokens = 100;
  double temperature = 0.5;
  double request_timeout = 120.0;  // seconds
  int max_retries = 3;
  int concurrency_limit = 4;
  double backoff_initial = 1.0;  // seconds, doubled per retry
  std::string api_key_env = "KPBENCH_API_KEY";

  void validate() const {
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (concurrency_limit < 1) throw ConfigError("concurrency_limit must be >= 1");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (!(request_timeout > 0.0)) throw ConfigError("request_timeout must be > 0");
    if (backoff_initial < 0.0) throw ConfigError("backoff_initial must be >= 0");
    if (model_name.empty()) throw ConfigError("model_name is required");
  }
};

struct Completion {
  std::string raw_text;
  std::string prompt_id;  // prompt_hash of the rendered prompt
  double latency_ms = 0.0;
  int attempt = 1;
  bool empty_choices = false;  // warning: the server returned no choices
  bool from_cache = false;
};

/// 64-bit FNV-1a of the rendered prompt, hex encoded.
inline std::string prompt_hash(std::string_view rendered) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(promptkit::detail::fnv1a64(rendered)));
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Chat-completions request body for one prompt.
inline nlohmann::json request_body(std::string_view prompt, const GenerationConfig& config) {
  return {{"model", config.model_name},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
          {"max_tokens", config.max_new_tokens},
          {"temperature", config.temperature}};
}

namespace detail {

class Limiter {
 public:
  explicit Limiter(int n) : free_(n) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

struct LimiterGuard {
  Limiter& l;
  explicit LimiterGuard(Limiter& limiter) : l(limiter) { l.acquire(); }
  ~LimiterGuard() { l.release(); }
};

}  // namespace detail

/// Chat-completions client. Shareable across threads; at most
/// `concurrency_limit` requests are in flight at once.
class LlmClient {
 public:
  explicit LlmClient(GenerationConfig config)
      : config_(std::move(config)), limiter_(config_.concurrency_limit) {
    config_.validate();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (config_.endpoint_url.starts_with("https://"))
      throw ConfigError("https endpoints need a build with OpenSSL");
#endif
  }

  const GenerationConfig& config() const { return config_; }

  Completion generate(const promptkit::PromptSpec& prompt) { return generate(prompt.rendered); }

  Completion generate(std::string_view rendered) {
    detail::LimiterGuard guard(limiter_);
    const std::string body = request_body(rendered, config_).dump();
    const auto start = std::chrono::steady_clock::now();

    httplib::Client client(config_.endpoint_url);
    const auto timeout = std::chrono::duration<double>(config_.request_timeout);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    int last_status = 0;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
      if (attempt > 1) {
        const double delay = config_.backoff_initial * static_cast<double>(1 << (attempt - 2));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      auto res = client.Post(config_.path, headers, body, "application/json");
      if (!res) {
        last_status = 0;
        last_error = httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw TransportError(res->status, "HTTP " + std::to_string(res->status) + ": " +
                                              res->body.substr(0, 200));

      Completion c = parse_response(res->body);
      c.prompt_id = prompt_hash(rendered);
      c.attempt = attempt;
      c.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      return c;
    }
    throw TransportError(last_status, "retries exhausted: " + last_error);
  }

  static Completion parse_response(std::string_view body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("non-JSON response: ") + e.what());
    }
    Completion c;
    if (!j.is_object()) throw ProtocolError("response is not a JSON object");
    const auto it = j.find("choices");
    if (it == j.end() || !it->is_array() || it->empty()) {
      c.empty_choices = true;
      return c;
    }
    try {
      const auto& content = it->at(0).at("message").at("content");
      c.raw_text = content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed choice: ") + e.what());
    }
    return c;
  }

 private:
  GenerationConfig config_;
  detail::Limiter limiter_;
};

// ---------------------------------------------------------------------------
// Completion cache

struct CacheEntry {
  std::string prompt_hash;
  std::string model;
  std::string raw_text;
  std::string timestamp;
};

/// Append-only JSONL cache keyed by (prompt_hash, model). Later lines win.
class CompletionCache {
 public:
  CompletionCache() = default;

  /// Loads existing entries (if the file exists) and appends new ones to it.
  explicit CompletionCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (utf8::trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        insert({j.at("prompt_hash").get<std::string>(), j.at("model").get<std::string>(),
                j.at("raw_text").get<std::string>(), j.value("timestamp", std::string())});
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, std::string("bad cache line: ") + e.what());
      }
    }
  }

  std::optional<std::string> lookup(std::string_view hash, std::string_view model) const {
    std::lock_guard lock(mu_);
    const auto it = entries_.find(key(hash, model));
    if (it == entries_.end()) return std::nullopt;
    return it->second.raw_text;
  }

  void store(CacheEntry e) {
    std::lock_guard lock(mu_);
    if (!path_.empty()) {
      std::ofstream out(path_, std::ios::app);
      if (!out) throw Error("cannot write cache file: " + path_);
      out << nlohmann::json{{"prompt_hash", e.prompt_hash},
                            {"model", e.model},
                            {"raw_text", e.raw_text},
                            {"timestamp", e.timestamp}}
                 .dump()
          << '\n';
    }
    entries_[key(e.prompt_hash, e.model)] = std::move(e);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  static std::string key(std::string_view hash, std::string_view model) {
    return std::string(hash) + '\x1f' + std::string(model);
  }
  void insert(CacheEntry e) { entries_[key(e.prompt_hash, e.model)] = std::move(e); }

  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, CacheEntry> entries_;
};

/// Cache-first generation. With `client` null, a cache miss is a TransportError
/// (replay mode never touches the network).
inline Completion cached_generate(LlmClient* client, CompletionCache& cache,
                                  const std::string& model, std::string_view rendered) {
  const std::string hash = prompt_hash(rendered);
  if (auto hit = cache.lookup(hash, model)) {
    Completion c;
    c.raw_text = std::move(*hit);
    c.prompt_id = hash;
    c.from_cache = true;
    return c;
  }
  if (!client) throw TransportError(0, "completion " + hash + " not in cache (replay mode)");
  Completion c = client->generate(rendered);
  cache.store({hash, model, c.raw_text, utc_timestamp()});
  return c;
}

// ---------------------------------------------------------------------------
// Output parsing

namespace detail {

inline constexpr std::string_view kLabel = "ключевые слова:";

inline bool strip_prefix(std::string& s, std::string_view prefix) {
  if (!s.starts_with(prefix)) return false;
  s.erase(0, prefix.size());
  return true;
}

inline bool strip_suffix(std::string& s, std::string_view suffix) {
  if (!s.ends_with(suffix)) return false;
  s.erase(s.size() - suffix.size());
  return true;
}

inline std::string collapse_space(std::string_view s) {
  std::string out;
  bool pending = false;
  for (std::size_t pos = 0; pos < s.size();) {
    const std::size_t start = pos;
    const char32_t c = utf8::next(s, pos);
    if (utf8::is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out.append(s.substr(start, pos - start));
  }
  return out;
}

/// Removes list markers, wrapping quotes and terminal periods until nothing changes.
inline std::string clean_item(std::string s) {
  static const std::regex numbered(R"(^\(?[0-9]{1,3}[.)](\s+|$))");
  static constexpr std::string_view bullets[] = {"-", "*", "+", "\xE2\x80\xA2",  // bullet
                                                 "\xE2\x80\x93",  // en dash
                                                 "\xE2\x80\x94"}; // em dash
  static constexpr std::pair<std::string_view, std::string_view> quotes[] = {
      {"\"", "\""}, {"'", "'"}, {"\xC2\xAB", "\xC2\xBB"} /* «» */,
      {"\xE2\x80\x9C", "\xE2\x80\x9D"} /* “” */, {"\xE2\x80\x9E", "\xE2\x80\x9C"} /* „“ */,
      {"`", "`"}};
  for (bool changed = true; changed;) {
    changed = false;
    s = collapse_space(s);
    if (utf8::to_lower(s).starts_with(kLabel)) {
      s.erase(0, kLabel.size());
      changed = true;
      continue;
    }
    std::smatch m;
    if (std::regex_search(s, m, numbered)) {
      s.erase(0, static_cast<std::size_t>(m.length(0)));
      changed = true;
      continue;
    }
    for (auto b : bullets) {
      if (strip_prefix(s, b)) {
        changed = true;
        break;
      }
    }
    if (changed) continue;
    for (auto [open, close] : quotes) {
      if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
        s = s.substr(open.size(), s.size() - open.size() - close.size());
        changed = true;
        break;
      }
    }
    if (changed) continue;
    if (strip_suffix(s, ".") || strip_suffix(s, "\xE2\x80\xA6" /* … */)) changed = true;
  }
  return s;
}

inline std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (std::size_t pos = 0; pos < s.size();) {
    const bool space = utf8::is_space(utf8::next(s, pos));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace detail

inline constexpr std::size_t kMaxPhraseWords = 10;
inline constexpr std::size_t kMaxPhrases = 20;

/// Turns a model completion into a keyphrase list:
///  1. text after a "Ключевые слова:" label line (the label line and all that
///     follows), else the whole output;
///  2. split on commas, semicolons and newlines;
///  3. strip list markers, wrapping quotes and terminal periods;
///  4. trim and collapse whitespace;
///  5. drop phrases with no letter or digit and phrases over 10 words;
///  6. case-insensitive dedup, first occurrence kept;
///  7. keep at most 20.
inline KeyphraseList parse_keyphrases(std::string_view raw) {
  std::string text(raw);
  // Rule 1.
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    if (eol == std::string_view::npos) eol = raw.size();
    const std::string_view line = utf8::trim(raw.substr(pos, eol - pos));
    // Lowercasing Cyrillic keeps byte lengths, so offsets carry over.
    if (utf8::to_lower(line).starts_with(detail::kLabel)) {
      const std::size_t label_at = static_cast<std::size_t>(line.data() - raw.data());
      text = std::string(raw.substr(label_at + detail::kLabel.size()));
      break;
    }
    pos = eol + 1;
  }

  KeyphraseList out;
  std::set<std::string> seen;
  std::string item;
  const auto flush = [&] {
    std::string phrase = detail::clean_item(item);
    item.clear();
    bool has_alnum = false;
    for (std::size_t p = 0; p < phrase.size() && !has_alnum;)
      has_alnum = utf8::is_alnum(utf8::next(phrase, p));
    if (!has_alnum || detail::word_count(phrase) > kMaxPhraseWords) return;
    if (!seen.insert(utf8::to_lower(phrase)).second) return;
    if (out.size() < kMaxPhrases) out.push_back(std::move(phrase));
  };
  for (char c : text) {
    if (c == ',' || c == ';' || c == '\n' || c == '\r') {
      flush();
    } else {
      item += c;
    }
  }
  flush();
  return out;
}

inline std::string join_keyphrases(const KeyphraseList& kps) {
  return promptkit::join_keyphrases(kps);
}

}  // namespace kpbench::llm
