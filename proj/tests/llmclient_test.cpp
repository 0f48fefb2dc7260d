#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <mutex>
#include <thread>

#include "kpbench/llmclient.hpp"
#include "mock_server.hpp"

using namespace kpbench;
using namespace kpbench::llm;
using kpbench::testing::MockServer;
using nlohmann::json;

namespace {

std::string chat_reply(const std::string& text) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}
      .dump();
}

GenerationConfig test_config(const std::string& url) {
  GenerationConfig c;
  c.endpoint_url = url;
  c.model_name = "mock-model";
  c.backoff_initial = 0.001;
  c.request_timeout = 5;
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("kpbench_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(Generate, RequestBodyCarriesDefaults) {
  MockServer mock;
  json seen;
  std::string auth;
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(chat_reply("граф, сеть"), "application/json");
  });
  mock.start();

  ::setenv("KPBENCH_TEST_KEY", "secret", 1);
  auto cfg = test_config(mock.url());
  cfg.api_key_env = "KPBENCH_TEST_KEY";
  LlmClient client(cfg);
  const auto c = client.generate(std::string_view("Текст аннотации: x"));
  EXPECT_EQ(seen["max_tokens"], 100);
  EXPECT_EQ(seen["temperature"], 0.5);
  EXPECT_EQ(seen["model"], "mock-model");
  ASSERT_EQ(seen["messages"].size(), 1u);
  EXPECT_EQ(seen["messages"][0]["role"], "user");
  EXPECT_EQ(seen["messages"][0]["content"], "Текст аннотации: x");
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(c.raw_text, "граф, сеть");
  EXPECT_EQ(c.attempt, 1);
  EXPECT_EQ(c.prompt_id, prompt_hash("Текст аннотации: x"));
}

TEST(Generate, RawTextVerbatim) {
  MockServer mock;
  const std::string text = "  Ключевые слова: «граф»;\n- сеть.\n\n";
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_reply(text), "application/json");
  });
  mock.start();
  LlmClient client(test_config(mock.url()));
  EXPECT_EQ(client.generate(std::string_view("p")).raw_text, text);
}

TEST(Generate, RetriesServerErrors) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 500;
      return;
    }
    res.set_content(chat_reply("ok"), "application/json");
  });
  mock.start();
  LlmClient client(test_config(mock.url()));
  const auto c = client.generate(std::string_view("p"));
  EXPECT_EQ(c.attempt, 3);
  EXPECT_EQ(c.raw_text, "ok");
  EXPECT_LE(c.attempt, client.config().max_retries + 1);
}

TEST(Generate, ExhaustedRetriesCarryStatus) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  mock.start();
  auto cfg = test_config(mock.url());
  cfg.max_retries = 2;
  LlmClient client(cfg);
  try {
    client.generate(std::string_view("p"));
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(Generate, ClientErrorNotRetried) {
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  mock.start();
  LlmClient client(test_config(mock.url()));
  EXPECT_THROW(client.generate(std::string_view("p")), TransportError);
  EXPECT_EQ(calls.load(), 1);
}

TEST(Generate, UnreachableEndpoint) {
  auto cfg = test_config("http://127.0.0.1:1");
  cfg.max_retries = 1;
  LlmClient client(cfg);
  try {
    client.generate(std::string_view("p"));
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 0);
  }
}

TEST(Generate, NonJsonIsProtocolError) {
  MockServer mock;
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>oops</html>", "text/html");
  });
  mock.start();
  LlmClient client(test_config(mock.url()));
  EXPECT_THROW(client.generate(std::string_view("p")), ProtocolError);
}

TEST(Generate, EmptyChoicesFlagged) {
  const auto c = LlmClient::parse_response(R"({"choices": []})");
  EXPECT_TRUE(c.empty_choices);
  EXPECT_EQ(c.raw_text, "");
  EXPECT_THROW(LlmClient::parse_response(R"({"choices": [{"text": "x"}]})"), ProtocolError);
}

TEST(Generate, ConcurrencyLimitHonored) {
  MockServer mock;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    --in_flight;
    res.set_content(chat_reply("x"), "application/json");
  });
  mock.start();
  auto cfg = test_config(mock.url());
  cfg.concurrency_limit = 2;
  LlmClient client(cfg);
  std::vector<std::thread> workers;
  for (int i = 0; i < 6; ++i)
    workers.emplace_back([&] { client.generate(std::string_view("p")); });
  for (auto& w : workers) w.join();
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(Generate, ConfigValidation) {
  GenerationConfig c = test_config("http://127.0.0.1:1");
  c.max_new_tokens = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = test_config("http://127.0.0.1:1");
  c.temperature = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = test_config("http://127.0.0.1:1");
  c.concurrency_limit = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Cache, PersistsAndReplays) {
  const auto path = temp_file("cache.jsonl");
  MockServer mock;
  std::atomic<int> calls{0};
  mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.set_content(chat_reply("граф, сеть"), "application/json");
  });
  mock.start();
  LlmClient client(test_config(mock.url()));
  {
    CompletionCache cache(path.string());
    EXPECT_EQ(cached_generate(&client, cache, "mock-model", "prompt").raw_text, "граф, сеть");
    EXPECT_TRUE(cached_generate(&client, cache, "mock-model", "prompt").from_cache);
    EXPECT_EQ(calls.load(), 1);
  }
  mock.stop();
  CompletionCache replay(path.string());
  EXPECT_EQ(replay.size(), 1u);
  EXPECT_EQ(cached_generate(nullptr, replay, "mock-model", "prompt").raw_text, "граф, сеть");
  EXPECT_THROW(cached_generate(nullptr, replay, "other-model", "prompt"), TransportError);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto j = json::parse(line);
  EXPECT_EQ(j["prompt_hash"], prompt_hash("prompt"));
  EXPECT_EQ(j["model"], "mock-model");
  EXPECT_TRUE(j.contains("timestamp"));
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------

TEST(Parse, LabelledLine) {
  EXPECT_EQ(parse_keyphrases("Ключевые слова: граф, сеть, обучение"),
            (KeyphraseList{"граф", "сеть", "обучение"}));
}

TEST(Parse, BulletList) {
  EXPECT_EQ(parse_keyphrases("- граф\n- нейронная сеть.\n"),
            (KeyphraseList{"граф", "нейронная сеть"}));
}

TEST(Parse, Empty) {
  EXPECT_TRUE(parse_keyphrases("").empty());
  EXPECT_TRUE(parse_keyphrases(" ,;\n. -").empty());
}

TEST(Parse, LabelAfterPreamble) {
  EXPECT_EQ(parse_keyphrases("Вот ответ.\nключевые слова: граф; дерево\nлес"),
            (KeyphraseList{"граф", "дерево", "лес"}));
}

TEST(Parse, MarkersQuotesPeriods) {
  EXPECT_EQ(parse_keyphrases("1. «граф»\n2) \"сеть\".\n* 'лес'...\n• поле"),
            (KeyphraseList{"граф", "сеть", "лес", "поле"}));
  // A number that is part of the phrase stays.
  EXPECT_EQ(parse_keyphrases("3D-модель, 2.5 нм"), (KeyphraseList{"3D-модель", "2.5 нм"}));
}

TEST(Parse, DedupCaseInsensitiveFirstWins) {
  EXPECT_EQ(parse_keyphrases("Граф, граф, ГРАФ, сеть"), (KeyphraseList{"Граф", "сеть"}));
}

TEST(Parse, LongPhrasesDroppedAndCap) {
  EXPECT_EQ(parse_keyphrases("один два три четыре пять шесть семь восемь девять десять "
                             "одиннадцать, граф"),
            (KeyphraseList{"граф"}));
  std::string many;
  for (int i = 0; i < 30; ++i) many += "слово" + std::to_string(i) + ", ";
  const auto out = parse_keyphrases(many);
  ASSERT_EQ(out.size(), 20u);
  EXPECT_EQ(out.front(), "слово0");
  EXPECT_EQ(out.back(), "слово19");
}

TEST(Parse, WhitespaceCollapsed) {
  EXPECT_EQ(parse_keyphrases("  нейронная \t  сеть  "), (KeyphraseList{"нейронная сеть"}));
}

TEST(Parse, IdempotentOnJoinedOutput) {
  const std::vector<std::string> inputs{
      "Ключевые слова: граф, сеть, обучение",
      "- граф\n- нейронная сеть.\n",
      ";Ключевые слова: граф",
      "1. 2. граф, «'сеть'», сеть.., Сеть",
      "\"граф, сеть\"",
      "a, b; c\n\n d ,,, e.",
      "— граф — сеть",
  };
  std::mt19937 rng(5);
  const std::vector<std::string> atoms{"граф", " ", ",", ";", "\n", "-", "1.", "«", "»", ".",
                                       "\"", "Сеть", "сеть", "ключевые слова:", "2)", "*"};
  std::vector<std::string> all = inputs;
  for (int i = 0; i < 500; ++i) {
    std::string s;
    const int len = static_cast<int>(rng() % 12);
    for (int j = 0; j < len; ++j) s += atoms[rng() % atoms.size()];
    all.push_back(s);
  }
  for (const auto& x : all) {
    const auto once = parse_keyphrases(x);
    EXPECT_EQ(parse_keyphrases(join_keyphrases(once)), once) << "input: " << x;
    std::set<std::string> folded;
    for (const auto& p : once) {
      EXPECT_FALSE(p.empty());
      EXPECT_EQ(std::string(utf8::trim(p)), p);
      EXPECT_TRUE(folded.insert(utf8::to_lower(p)).second);
    }
  }
}
