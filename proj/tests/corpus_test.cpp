#include <gtest/gtest.h>

#include <random>

#include "kpbench/corpus.hpp"

using namespace kpbench;
using namespace kpbench::corpus;

namespace {

Document doc(std::string id, std::string abstract, std::vector<std::string> kps,
             Split split = Split::train) {
  return Document{std::move(id), std::move(abstract), std::move(kps), split};
}

}  // namespace

TEST(LoadCorpus, JsonlPreservesOrder) {
  const std::string text =
      R"({"id": "b", "abstract": "Текст два.", "keyphrases": ["граф"], "split": "test"})"
      "\n\n"
      R"({"id": "a", "abstract": "Текст один.", "keyphrases": ["сеть", "граф"], "split": "train"})"
      "\n";
  const auto docs = parse_corpus(text, Format::jsonl);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "b");
  EXPECT_EQ(docs[0].split, Split::test);
  EXPECT_EQ(docs[1].keyphrases, (std::vector<std::string>{"сеть", "граф"}));
}

TEST(LoadCorpus, EmptyInput) {
  EXPECT_TRUE(parse_corpus("", Format::jsonl).empty());
  EXPECT_TRUE(parse_corpus("", Format::csv).empty());
}

TEST(LoadCorpus, EmptyKeyphraseIsParseErrorAtRecord) {
  const std::string text =
      R"({"id": "a", "abstract": "x", "keyphrases": ["сеть"], "split": "train"})"
      "\n"
      R"({"id": "b", "abstract": "y", "keyphrases": ["", "граф"], "split": "train"})"
      "\n";
  try {
    parse_corpus(text, Format::jsonl);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record(), 2u);
  }
  const auto repaired = parse_corpus(text, Format::jsonl, {.repair = true});
  EXPECT_EQ(repaired[1].keyphrases, (std::vector<std::string>{"граф"}));
}

TEST(LoadCorpus, MalformedJsonNamesLine) {
  try {
    parse_corpus("{\"id\": \"a\",", Format::jsonl);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record(), 1u);
  }
  EXPECT_THROW(parse_corpus(R"({"id": "a", "abstract": "x", "split": "train"})", Format::jsonl),
               ParseError);
  EXPECT_THROW(
      parse_corpus(R"({"id": "a", "abstract": "x", "keyphrases": ["k"], "split": "dev"})",
                   Format::jsonl),
      ParseError);
  EXPECT_THROW(
      parse_corpus(R"({"id": "a", "abstract": "   ", "keyphrases": ["k"], "split": "train"})",
                   Format::jsonl),
      ParseError);
}

TEST(LoadCorpus, DuplicateKeyphraseAfterNormalization) {
  EXPECT_THROW(parse_corpus(R"({"id": "a", "abstract": "x", "keyphrases": ["Граф  сети", "граф сети"], "split": "train"})",
                            Format::jsonl),
               ParseError);
}

TEST(LoadCorpus, DuplicateIdIsIntegrityError) {
  const std::string text =
      R"({"id": "a", "abstract": "x", "keyphrases": ["k"], "split": "train"})"
      "\n"
      R"({"id": "a", "abstract": "y", "keyphrases": ["k"], "split": "test"})";
  EXPECT_THROW(parse_corpus(text, Format::jsonl), IntegrityError);
}

TEST(LoadCorpus, CsvWithQuotingAndSemicolons) {
  const std::string text =
      "id,split,abstract,keyphrases\r\n"
      "1,train,\"Графы, сети и \"\"кавычки\"\"\nвторая строка.\",граф; нейронная сеть\r\n"
      "2,test,Просто текст.,один\n";
  const auto docs = parse_corpus(text, Format::csv);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].abstract, "Графы, сети и \"кавычки\"\nвторая строка.");
  EXPECT_EQ(docs[0].keyphrases, (std::vector<std::string>{"граф", "нейронная сеть"}));
  EXPECT_EQ(docs[1].split, Split::test);
}

TEST(LoadCorpus, CsvErrors) {
  EXPECT_THROW(parse_corpus("id,split,abstract\n1,train,x\n", Format::csv), ParseError);
  EXPECT_THROW(parse_corpus("id,split,abstract,keyphrases\n1,train,x\n", Format::csv), ParseError);
  EXPECT_THROW(parse_corpus("id,split,abstract,keyphrases\n1,train,\"x,k\n", Format::csv),
               ParseError);
  try {
    parse_corpus("id,split,abstract,keyphrases\n1,train,x,k\n2,train,y,a;;b\n", Format::csv);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record(), 3u);
  }
}

TEST(ClassifyPresence, InflectedContiguousMatch) {
  const auto d = doc("1", "графовые нейронные сети обучаются", {"графовая нейронная сеть"});
  const auto label = classify_presence(d);
  ASSERT_EQ(label.flags.size(), 1u);
  EXPECT_EQ(label.flags[0], Presence::present);
  EXPECT_EQ(label.document_class, DocumentClass::present_only);
}

TEST(ClassifyPresence, NonContiguousIsAbsent) {
  const auto d = doc("1", "графовые глубокие нейронные сети", {"графовая нейронная сеть", "лемма"});
  const auto label = classify_presence(d);
  EXPECT_EQ(label.flags[0], Presence::absent);
  EXPECT_EQ(label.flags[1], Presence::absent);
  EXPECT_EQ(label.document_class, DocumentClass::absent_only);
}

TEST(ClassifyPresence, Mixed) {
  const auto d = doc("1", "Метод опорных векторов для классификации.",
                     {"опорные векторы", "машинное обучение"});
  EXPECT_EQ(classify_presence(d).document_class, DocumentClass::mixed);
}

TEST(ClassifyPresence, VerbatimSpanAlwaysPresent) {
  std::mt19937 rng(3);
  const std::string abstract =
      "В статье рассматривается задача генерации ключевых слов для научных текстов на русском "
      "языке. Предложен метод, основанный на больших языковых моделях, и проведено сравнение с "
      "алгоритмами YAKE и RuTermExtract.";
  const auto tokens = textproc::tokenize(abstract);
  std::vector<const textproc::Token*> words;
  for (const auto& t : tokens)
    if (t.is_word) words.push_back(&t);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = rng() % words.size();
    const std::size_t len = 1 + rng() % std::min<std::size_t>(4, words.size() - b);
    const std::size_t begin = words[b]->char_offset;
    const std::size_t end = words[b + len - 1]->char_offset + words[b + len - 1]->surface.size();
    const std::string phrase = abstract.substr(begin, end - begin);
    const auto label = classify_presence(doc("x", abstract, {phrase}));
    EXPECT_EQ(label.flags[0], Presence::present) << phrase;
  }
}

TEST(ClassifyPresence, Deterministic) {
  const auto d = doc("1", "Графы и сети.", {"граф", "дерево"});
  EXPECT_EQ(classify_presence(d).flags, classify_presence(d).flags);
}

TEST(ComputeStats, SingleDocument) {
  const std::vector<Document> docs{doc("1", "Граф. Сеть!", {"граф", "сеть", "дерево"})};
  const auto st = compute_stats(docs);
  EXPECT_DOUBLE_EQ(st.avg_keyphrases.mean, 3.0);
  EXPECT_DOUBLE_EQ(st.avg_keyphrases.std, 0.0);
  EXPECT_DOUBLE_EQ(st.avg_sentences.mean, 2.0);
  EXPECT_DOUBLE_EQ(st.avg_tokens.mean, 4.0);
  EXPECT_EQ(st.mixed_count, 1u);
  EXPECT_NEAR(st.absent_pct, 100.0 / 3.0, 1e-12);
}

TEST(ComputeStats, PopulationStd) {
  const std::vector<Document> docs{doc("1", "a", {"a", "b"}), doc("2", "b", {"a", "b", "c", "d"})};
  const auto st = compute_stats(docs);
  EXPECT_DOUBLE_EQ(st.avg_keyphrases.mean, 3.0);
  EXPECT_DOUBLE_EQ(st.avg_keyphrases.std, 1.0);
}

TEST(ComputeStats, ClassCountsSumToTrainSizeAndConcatInvariant) {
  std::vector<Document> docs{
      doc("1", "графовые нейронные сети", {"нейронная сеть"}),
      doc("2", "текст про графы", {"граф", "лемма"}),
      doc("3", "ещё один текст", {"теорема"}),
      doc("4", "Тестовый текст. Второе предложение.", {"тест"}, Split::test),
  };
  const auto st = compute_stats(docs);
  EXPECT_EQ(st.train_size, 3u);
  EXPECT_EQ(st.test_size, 1u);
  EXPECT_EQ(st.present_only_count + st.absent_only_count + st.mixed_count, st.train_size);
  EXPECT_EQ(st.present_only_count, 1u);
  EXPECT_EQ(st.mixed_count, 1u);
  EXPECT_EQ(st.absent_only_count, 1u);
  EXPECT_GE(st.absent_pct, 0.0);
  EXPECT_LE(st.absent_pct, 100.0);

  auto doubled = docs;
  doubled.insert(doubled.end(), docs.begin(), docs.end());
  const auto st2 = compute_stats(doubled);
  EXPECT_NEAR(st2.avg_tokens.mean, st.avg_tokens.mean, 1e-12);
  EXPECT_NEAR(st2.avg_tokens.std, st.avg_tokens.std, 1e-12);
  EXPECT_NEAR(st2.avg_sentences.std, st.avg_sentences.std, 1e-12);
  EXPECT_NEAR(st2.avg_keyphrases.std, st.avg_keyphrases.std, 1e-12);
  EXPECT_NEAR(st2.absent_pct, st.absent_pct, 1e-12);
}
