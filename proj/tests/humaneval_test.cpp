#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "kpbench/humaneval.hpp"
#include "mock_server.hpp"

using namespace kpbench;
using namespace kpbench::humaneval;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSystems{"saiga", "mbart", "rute"};

std::vector<corpus::Document> test_docs(int n) {
  std::vector<corpus::Document> docs;
  for (int i = 0; i < n; ++i) {
    const std::string id = "doc" + std::to_string(1000 + i);
    docs.push_back({id, "Аннотация номер " + std::to_string(i) + " о графах.",
                    {"граф", "ключ " + std::to_string(i)}, corpus::Split::test});
  }
  return docs;
}

SystemOutputs outputs_for(const std::vector<corpus::Document>& docs) {
  SystemOutputs out;
  for (const auto& s : kSystems)
    for (const auto& d : docs) out[s][d.id] = {"вывод " + s.substr(0, 1) + " " + d.id.substr(3)};
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kpbench_he_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

AnnotationMark mark(std::string task, std::string expert, std::array<bool, 4> c) {
  return {std::move(task), std::move(expert), c, "2024-01-01T00:00:00Z"};
}

/// Tasks of one system in file order.
std::vector<std::string> tasks_of(const HumanEvalStore& s, const std::string& system) {
  std::vector<std::string> out;
  for (const auto& t : s.tasks())
    if (t.system == system) out.push_back(t.task_id);
  return out;
}

}  // namespace

TEST(Sample, HundredDocsGiveFourHundredTasks) {
  const auto docs = test_docs(250);
  const auto set = sample_eval_set(docs, outputs_for(docs), 100, 7);
  EXPECT_EQ(set.doc_ids.size(), 100u);
  EXPECT_EQ(set.tasks.size(), 400u);
  std::size_t system_tasks = 0;
  std::set<std::string> ids;
  for (const auto& t : set.tasks) {
    system_tasks += t.system != kAuthors;
    ids.insert(t.task_id);
    EXPECT_FALSE(t.keyphrases.empty());
  }
  EXPECT_EQ(system_tasks, 300u);
  EXPECT_EQ(ids.size(), 400u);
  EXPECT_EQ(std::set<std::string>(set.doc_ids.begin(), set.doc_ids.end()).size(), 100u);
}

TEST(Sample, SingleDocument) {
  const auto docs = test_docs(5);
  EXPECT_EQ(sample_eval_set(docs, outputs_for(docs), 1, 1).tasks.size(), 4u);
}

TEST(Sample, SeededDeterminism) {
  const auto docs = test_docs(200);
  const auto out = outputs_for(docs);
  const auto a = sample_eval_set(docs, out, 20, 42);
  const auto b = sample_eval_set(docs, out, 20, 42);
  const auto c = sample_eval_set(docs, out, 20, 43);
  EXPECT_EQ(a.doc_ids, b.doc_ids);
  for (std::size_t i = 0; i < a.tasks.size(); ++i) EXPECT_EQ(a.tasks[i].task_id, b.tasks[i].task_id);
  EXPECT_NE(a.doc_ids, c.doc_ids);
  // Input order does not matter.
  auto reversed = docs;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(sample_eval_set(reversed, out, 20, 42).doc_ids, a.doc_ids);
}

TEST(Sample, MissingOutputIsResampled) {
  const auto docs = test_docs(10);
  auto out = outputs_for(docs);
  const auto full = sample_eval_set(docs, out, 3, 5);
  out["mbart"].erase(full.doc_ids[0]);
  const auto again = sample_eval_set(docs, out, 3, 5);
  EXPECT_EQ(again.resampled, std::vector<std::string>{full.doc_ids[0]});
  EXPECT_EQ(again.doc_ids.size(), 3u);
  EXPECT_EQ(std::count(again.doc_ids.begin(), again.doc_ids.end(), full.doc_ids[0]), 0);
  EXPECT_THROW(sample_eval_set(docs, out, 10, 5), Error);
}

TEST(Sample, RequiresThreeSystems) {
  const auto docs = test_docs(3);
  auto out = outputs_for(docs);
  out.erase("rute");
  EXPECT_THROW(sample_eval_set(docs, out, 1, 1), ConfigError);
}

// ---------------------------------------------------------------------------

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = scratch(::testing::UnitTest::GetInstance()->current_test_info()->name());
    docs = test_docs(20);
    HumanEvalStore::create(dir, sample_eval_set(docs, outputs_for(docs), 4, 11),
                           {"e1", "e2", "e3"}, 11);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path dir;
  std::vector<corpus::Document> docs;
};

TEST_F(StoreTest, FilesAndPermissions) {
  EXPECT_TRUE(fs::exists(dir / "tasks.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "marks.jsonl"));
  const auto perms = fs::status(dir / "blinding.json").permissions();
  EXPECT_EQ(perms & (fs::perms::group_all | fs::perms::others_all), fs::perms::none);
  std::ifstream in(dir / "tasks.jsonl");
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (const auto& s : kSystems) EXPECT_EQ(all.find(s), std::string::npos);
  EXPECT_EQ(all.find("systemA"), std::string::npos);
  EXPECT_EQ(all.find("authors"), std::string::npos);
  // Refuses to overwrite an existing study.
  EXPECT_THROW(HumanEvalStore::create(dir, sample_eval_set(docs, outputs_for(docs), 1, 1), {"x"}, 1),
               ConfigError);
}

TEST_F(StoreTest, RecordAndReplace) {
  HumanEvalStore store(dir);
  const auto task = store.tasks()[0].task_id;
  EXPECT_FALSE(store.record_mark(mark(task, "e1", {false, true, false, false})).replaced);
  const auto ack = store.record_mark(mark(task, "e1", {false, false, false, false}));
  EXPECT_TRUE(ack.replaced);
  EXPECT_EQ(ack.history_length, 2u);
  EXPECT_EQ(store.history_length(task, "e1"), 2u);
  const auto sys = store.tasks()[0].system;
  const auto r = store.report();
  EXPECT_EQ(r.per_expert.at("e1").at(sys)[1].marked, 1u);
  EXPECT_EQ(r.per_expert.at("e1").at(sys)[1].true_count, 0u);

  // Survives a reopen, latest mark still current.
  HumanEvalStore reopened(dir);
  EXPECT_EQ(reopened.history_length(task, "e1"), 2u);
  EXPECT_EQ(to_json(reopened.report()), to_json(r));
}

TEST_F(StoreTest, Validation) {
  HumanEvalStore store(dir);
  const auto task = store.tasks()[0].task_id;
  EXPECT_THROW(store.record_mark(mark("nope", "e1", {})), ValidationError);
  EXPECT_THROW(store.record_mark(mark(task, "intruder", {})), ValidationError);
  json partial{{"task_id", task}, {"expert_id", "e1"}, {"grammar_mistakes", false},
               {"redundancy", true}, {"insufficiency", false}};
  EXPECT_THROW(mark_from_json(partial), ValidationError);
  partial["generic_words"] = "yes";
  EXPECT_THROW(mark_from_json(partial), ValidationError);
  partial["generic_words"] = true;
  EXPECT_NO_THROW(mark_from_json(partial));
}

TEST_F(StoreTest, DisplayOrderPerExpert) {
  HumanEvalStore store(dir);
  const auto first1 = store.next_task("e1");
  const auto first2 = store.next_task("e2");
  ASSERT_TRUE(first1 && first2);
  // Walk e1 to completion; every task appears once.
  std::set<std::string> seen;
  std::vector<std::string> order1;
  while (auto t = store.next_task("e1")) {
    order1.push_back((*t)["task_id"]);
    EXPECT_TRUE(seen.insert((*t)["task_id"]).second);
    store.record_mark(mark((*t)["task_id"], "e1", {}));
  }
  EXPECT_EQ(seen.size(), 16u);
  EXPECT_EQ(store.progress("e1")["remaining"], 0);
  std::vector<std::string> order2;
  while (auto t = store.next_task("e2")) {
    order2.push_back((*t)["task_id"]);
    store.record_mark(mark((*t)["task_id"], "e2", {}));
  }
  EXPECT_NE(order1, order2);
}

// One expert marks 2 of 4 systemA tasks redundant -> 0.5.
TEST_F(StoreTest, HandFractionSingleExpert) {
  HumanEvalStore store(dir);
  const auto a = tasks_of(store, "mbart");  // sorted names: mbart, rute, saiga
  ASSERT_EQ(a.size(), 4u);
  store.record_mark(mark(a[0], "e1", {false, true, false, false}));
  store.record_mark(mark(a[1], "e1", {false, true, false, false}));
  store.record_mark(mark(a[2], "e1", {false, false, false, false}));
  store.record_mark(mark(a[3], "e1", {false, false, false, false}));
  const auto r = store.report();
  EXPECT_DOUBLE_EQ(*r.per_expert.at("e1").at("mbart")[1].fraction(), 0.5);
  EXPECT_DOUBLE_EQ(*r.per_expert.at("e1").at("mbart")[0].fraction(), 0.0);
  EXPECT_FALSE(r.per_expert.at("e2").at("mbart")[1].fraction());  // not imputed
  EXPECT_EQ(r.coverage.at("e1").first, 4u);
  EXPECT_EQ(r.coverage.at("e1").second, 16u);
}

// Scripted 3-expert scenario: on "rute" redundancy, e1 marks 4/4, e2 0/4, e3 2/4.
TEST_F(StoreTest, ThreeExpertsMeanAndDivergence) {
  HumanEvalStore store(dir);
  const std::map<std::string, int> redundant{{"e1", 4}, {"e2", 0}, {"e3", 2}};
  for (const auto& [expert, k] : redundant) {
    int i = 0;
    for (const auto& t : tasks_of(store, "rute"))
      store.record_mark(mark(t, expert, {false, i++ < k, false, false}));
  }
  const auto r = store.report();
  const auto& s = r.per_system.at("rute")[1];
  EXPECT_DOUBLE_EQ(*s.mean, 0.5);
  EXPECT_DOUBLE_EQ(*s.divergence(), 1.0);
  EXPECT_EQ(s.experts, 3u);
  EXPECT_DOUBLE_EQ(*r.per_system.at("rute")[0].mean, 0.0);
}

TEST_F(StoreTest, CompleteCoverageDenominators) {
  HumanEvalStore store(dir);
  std::mt19937 rng(1);
  for (const auto& e : store.experts())
    for (const auto& t : store.tasks())
      store.record_mark(mark(t.task_id, e, {bool(rng() % 2), bool(rng() % 2), bool(rng() % 2),
                                            bool(rng() % 2)}));
  const auto r = store.report();
  for (const auto& [expert, systems] : r.per_expert) {
    EXPECT_EQ(systems.size(), 4u);
    for (const auto& [sys, counts] : systems)
      for (const auto& c : counts) EXPECT_EQ(c.marked, 4u);  // n documents
    EXPECT_EQ(r.coverage.at(expert).first, 16u);
  }
  // Mean row equals the average of the expert rows.
  for (const auto& [sys, crit] : r.per_system) {
    for (std::size_t c = 0; c < 4; ++c) {
      double sum = 0;
      for (const auto& e : store.experts()) sum += *r.per_expert.at(e).at(sys)[c].fraction();
      EXPECT_NEAR(*crit[c].mean, sum / 3, 1e-12);
    }
  }
}

TEST_F(StoreTest, AggregateIgnoresArrivalOrder) {
  HumanEvalStore store(dir);
  std::vector<AnnotationMark> marks;
  std::mt19937 rng(9);
  for (const auto& e : store.experts())
    for (const auto& t : store.tasks())
      if (rng() % 3) marks.push_back(mark(t.task_id, e, {bool(rng() % 2), bool(rng() % 2),
                                                         bool(rng() % 2), bool(rng() % 2)}));
  std::map<std::string, std::string> sys;
  for (const auto& t : store.tasks()) sys[t.task_id] = t.system;
  const auto base = to_json(aggregate_marks(marks, sys, store.experts()));
  for (int i = 0; i < 5; ++i) {
    std::shuffle(marks.begin(), marks.end(), rng);
    EXPECT_EQ(to_json(aggregate_marks(marks, sys, store.experts())), base);
  }
}

// ---------------------------------------------------------------------------

TEST_F(StoreTest, HttpApiAndBlindingScan) {
  HumanEvalStore store(dir);
  kpbench::testing::MockServer server;
  install_routes(server.server, store, "admin-secret");
  server.start();
  httplib::Client client(server.url());

  std::vector<std::string> forbidden{"systemA", "systemB", "systemC", "authors", "system",
                                     "hidden"};
  for (const auto& s : kSystems) forbidden.push_back(s);

  for (const auto& expert : store.experts()) {
    int served = 0;
    while (true) {
      auto res = client.Get("/api/experts/" + expert + "/tasks/next");
      ASSERT_TRUE(res);
      ASSERT_EQ(res->status, 200);
      for (const auto& f : forbidden) EXPECT_EQ(res->body.find(f), std::string::npos) << f;
      const auto payload = json::parse(res->body);
      if (payload.value("done", false)) {
        EXPECT_EQ(payload["marked"], 16);
        break;
      }
      std::set<std::string> keys;
      for (const auto& [k, _] : payload.items()) keys.insert(k);
      EXPECT_EQ(keys, (std::set<std::string>{"task_id", "doc_id", "abstract", "keyphrases",
                                             "display_order", "total"}));
      json m{{"task_id", payload["task_id"]}, {"expert_id", expert},
             {"grammar_mistakes", false}, {"redundancy", served % 2 == 0},
             {"insufficiency", false}, {"generic_words", false}};
      auto post = client.Post("/api/marks", m.dump(), "application/json");
      ASSERT_TRUE(post);
      EXPECT_EQ(post->status, 201);
      EXPECT_EQ(json::parse(post->body)["status"], "created");
      ++served;
    }
    EXPECT_EQ(served, 16);
  }

  // Resubmission is an update.
  const auto t0 = store.tasks()[0].task_id;
  json again{{"task_id", t0}, {"expert_id", "e1"}, {"grammar_mistakes", true},
             {"redundancy", true}, {"insufficiency", true}, {"generic_words", true}};
  auto upd = client.Post("/api/marks", again.dump(), "application/json");
  ASSERT_TRUE(upd);
  EXPECT_EQ(upd->status, 201);
  EXPECT_EQ(json::parse(upd->body)["status"], "updated");

  // Validation failures.
  again.erase("generic_words");
  EXPECT_EQ(client.Post("/api/marks", again.dump(), "application/json")->status, 400);
  EXPECT_EQ(client.Post("/api/marks", "not json", "application/json")->status, 400);
  again["generic_words"] = false;
  again["expert_id"] = "nobody";
  EXPECT_EQ(client.Post("/api/marks", again.dump(), "application/json")->status, 400);

  auto prog = client.Get("/api/progress/e2");
  ASSERT_TRUE(prog);
  EXPECT_EQ(json::parse(prog->body)["marked"], 16);
  EXPECT_EQ(client.Get("/api/progress/nobody")->status, 404);
  EXPECT_EQ(client.Get("/api/experts/nobody/tasks/next")->status, 404);

  EXPECT_EQ(client.Get("/api/report")->status, 401);
  auto report = client.Get("/api/report", {{"Authorization", "Bearer admin-secret"}});
  ASSERT_TRUE(report);
  EXPECT_EQ(report->status, 200);
  const auto r = json::parse(report->body);
  EXPECT_EQ(r["coverage"]["e3"]["marked"], 16);
  EXPECT_TRUE(r["per_system"].contains("saiga"));
  EXPECT_TRUE(r["per_system"].contains("authors"));
}
