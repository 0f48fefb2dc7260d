#pragma once

#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>

#include "kpbench/error.hpp"
#include "kpbench/textproc/utf8.hpp"

namespace kpbench::textproc {

/// Embedded copy of data/stopwords_ru.txt (a test keeps the two in sync).
inline constexpr std::string_view kRussianStopwordsText = R"STOP(# Russian function words used for stopword tagging.
# One lowercase word per line; lines starting with '#' are comments.
# version 1
а
без
более
бы
был
была
были
было
быть
в
вам
вас
весь
во
вот
все
всего
всех
вы
где
да
даже
для
до
его
ее
её
ей
ему
если
есть
еще
ещё
же
за
здесь
и
из
или
им
их
к
как
какой
какая
какие
когда
кто
ли
либо
между
меня
мне
много
может
можно
мы
на
над
надо
нам
нас
не
него
нее
неё
нет
ни
них
но
ну
о
об
однако
он
она
они
оно
от
очень
по
под
после
при
про
с
со
так
также
такой
такие
там
те
тем
то
того
тоже
той
только
том
ты
у
уже
хотя
чего
чей
чем
что
чтобы
чье
чья
эта
эти
этих
это
этого
этой
этом
этот
эту
я
которые
который
которая
которое
которых
которым
которой
котором
которую
сам
сама
само
себя
себе
свой
своей
свои
своих
всё
каждый
другой
другие
перед
через
около
среди
вместе
т
е
д
др
рис
)STOP";

/// Immutable stopword set. Lookups take lowercase words.
class StopwordList {
 public:
  StopwordList() = default;

  /// Parses the one-word-per-line format; `#` starts a comment line.
  static StopwordList parse(std::string_view text) {
    StopwordList list;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      std::string_view line = utf8::trim(text.substr(pos, eol - pos));
      if (!line.empty() && line.front() != '#') list.words_.insert(utf8::to_lower(line));
      pos = eol + 1;
    }
    return list;
  }

  static StopwordList load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open stopword file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
  }

  static const StopwordList& russian() {
    static const StopwordList list = parse(kRussianStopwordsText);
    return list;
  }

  bool contains(std::string_view lower_word) const {
    return words_.find(std::string(lower_word)) != words_.end();
  }
  std::size_t size() const noexcept { return words_.size(); }
  const std::set<std::string>& words() const noexcept { return words_; }

 private:
  std::set<std::string> words_;
};

}  // namespace kpbench::textproc
