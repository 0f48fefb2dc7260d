#pragma once

#include <array>
#include <concepts>
#include <string>
#include <string_view>

#include "kpbench/textproc/utf8.hpp"

namespace kpbench::textproc {

/// Anything that maps one word to its normalized form.
template <class S>
concept WordStemmer = requires(const S& s, std::string_view w) {
  { s(w) } -> std::convertible_to<std::string>;
};

namespace detail {

struct Suffix {
  std::u32string_view text;
  int group;  // 1: must follow а/я, 2: unconditional
};

// Suffix tables of the Snowball Russian stemmer.
inline constexpr std::array<Suffix, 9> kPerfectiveGerund{{
    {U"в", 1}, {U"ив", 2}, {U"ыв", 2}, {U"вши", 1}, {U"ивши", 2}, {U"ывши", 2},
    {U"вшись", 1}, {U"ившись", 2}, {U"ывшись", 2},
}};

inline constexpr std::array<Suffix, 26> kAdjective{{
    {U"ее", 2}, {U"ие", 2}, {U"ое", 2}, {U"ые", 2}, {U"ими", 2}, {U"ыми", 2}, {U"ей", 2},
    {U"ий", 2}, {U"ой", 2}, {U"ый", 2}, {U"ем", 2}, {U"им", 2}, {U"ом", 2}, {U"ым", 2},
    {U"его", 2}, {U"ого", 2}, {U"ему", 2}, {U"ому", 2}, {U"их", 2}, {U"ых", 2}, {U"ею", 2},
    {U"ою", 2}, {U"ую", 2}, {U"юю", 2}, {U"ая", 2}, {U"яя", 2},
}};

inline constexpr std::array<Suffix, 8> kParticiple{{
    {U"ем", 1}, {U"нн", 1}, {U"вш", 1}, {U"ивш", 2}, {U"ывш", 2}, {U"щ", 1}, {U"ющ", 1}, {U"ующ", 2},
}};

inline constexpr std::array<Suffix, 2> kReflexive{{{U"сь", 2}, {U"ся", 2}}};

inline constexpr std::array<Suffix, 46> kVerb{{
    {U"ла", 1},   {U"ила", 2}, {U"ыла", 2}, {U"на", 1},  {U"ена", 2},  {U"ете", 1},
    {U"ите", 2},  {U"йте", 1}, {U"ейте", 2}, {U"уйте", 2}, {U"ли", 1},  {U"или", 2},
    {U"ыли", 2},  {U"й", 1},   {U"ей", 2},  {U"уй", 2},  {U"л", 1},    {U"ил", 2},
    {U"ыл", 2},   {U"ем", 1},  {U"им", 2},  {U"ым", 2},  {U"н", 1},    {U"ен", 2},
    {U"ло", 1},   {U"ило", 2}, {U"ыло", 2}, {U"но", 1},  {U"ено", 2},  {U"нно", 1},
    {U"ет", 1},   {U"ует", 2}, {U"ит", 2},  {U"ыт", 2},  {U"ют", 1},   {U"уют", 2},
    {U"ят", 2},   {U"ны", 1},  {U"ены", 2}, {U"ть", 1},  {U"ить", 2},  {U"ыть", 2},
    {U"ешь", 1},  {U"ишь", 2}, {U"ю", 2},   {U"ую", 2},
}};

inline constexpr std::array<Suffix, 36> kNoun{{
    {U"а", 2},  {U"ев", 2},  {U"ов", 2},  {U"е", 2},   {U"ие", 2},   {U"ье", 2},
    {U"и", 2},  {U"еи", 2},  {U"ии", 2},  {U"ами", 2}, {U"ями", 2},  {U"иями", 2},
    {U"й", 2},  {U"ей", 2},  {U"ией", 2}, {U"ий", 2},  {U"ой", 2},   {U"ам", 2},
    {U"ем", 2}, {U"ием", 2}, {U"ом", 2},  {U"ям", 2},  {U"иям", 2},  {U"о", 2},
    {U"у", 2},  {U"ах", 2},  {U"ях", 2},  {U"иях", 2}, {U"ы", 2},    {U"ь", 2},
    {U"ю", 2},  {U"ию", 2},  {U"ью", 2},  {U"я", 2},   {U"ия", 2},   {U"ья", 2},
}};

inline constexpr std::array<Suffix, 2> kDerivational{{{U"ост", 2}, {U"ость", 2}}};

inline constexpr std::array<Suffix, 4> kTidyUp{{{U"ейше", 1}, {U"н", 2}, {U"ейш", 1}, {U"ь", 3}}};

inline bool is_vowel(char32_t c) {
  switch (c) {
    case U'а': case U'е': case U'и': case U'о': case U'у':
    case U'ы': case U'э': case U'ю': case U'я':
      return true;
    default:
      return false;
  }
}

/// Longest table entry that is a suffix of `word` lying entirely at or after `floor`.
template <std::size_t N>
const Suffix* longest_suffix(const std::u32string& word, std::size_t floor,
                             const std::array<Suffix, N>& table) {
  const Suffix* best = nullptr;
  for (const auto& s : table) {
    if (s.text.size() > word.size() || word.size() - s.text.size() < floor) continue;
    if (word.compare(word.size() - s.text.size(), s.text.size(), s.text.data(),
                     s.text.size()) != 0)
      continue;
    if (!best || s.text.size() > best->text.size()) best = &s;
  }
  return best;
}

inline bool preceded_by_a_or_ya(const std::u32string& word, std::size_t suffix_len,
                                std::size_t floor) {
  const std::size_t at = word.size() - suffix_len;
  if (at == 0 || at - 1 < floor) return false;
  return word[at - 1] == U'а' || word[at - 1] == U'я';
}

/// Group-aware removal: group 1 entries require a preceding а/я inside the region.
template <std::size_t N>
bool remove_grouped(std::u32string& word, std::size_t floor, const std::array<Suffix, N>& table) {
  const Suffix* s = longest_suffix(word, floor, table);
  if (!s) return false;
  if (s->group == 1 && !preceded_by_a_or_ya(word, s->text.size(), floor)) return false;
  word.resize(word.size() - s->text.size());
  return true;
}

}  // namespace detail

/// Snowball Russian stemmer. Input is lowercased and ё is folded to е; words
/// without Cyrillic vowels (Latin, digits) come back lowercased and otherwise
/// unchanged.
struct RussianStemmer {
  std::string operator()(std::string_view word) const {
    std::u32string w = utf8::decode(word);
    for (auto& c : w) {
      c = utf8::to_lower(c);
      if (c == U'ё') c = U'е';
    }
    stem_in_place(w);
    return utf8::encode(w);
  }

  static void stem_in_place(std::u32string& w) {
    using namespace detail;
    // RV starts after the first vowel; R2 is the R1 of R1.
    std::size_t rv = w.size();
    std::size_t r2 = w.size();
    {
      std::size_t i = 0;
      while (i < w.size() && !is_vowel(w[i])) ++i;
      if (i < w.size()) {
        rv = i + 1;
        std::size_t j = rv;
        while (j < w.size() && is_vowel(w[j])) ++j;
        if (j < w.size()) {
          const std::size_t r1 = j + 1;
          std::size_t k = r1;
          while (k < w.size() && !is_vowel(w[k])) ++k;
          if (k < w.size()) {
            std::size_t m = k + 1;
            while (m < w.size() && is_vowel(w[m])) ++m;
            if (m < w.size()) r2 = m + 1;
          }
        }
      }
    }
    if (rv >= w.size()) return;

    // Step 1
    if (!remove_grouped(w, rv, kPerfectiveGerund)) {
      if (const Suffix* s = longest_suffix(w, rv, kReflexive)) w.resize(w.size() - s->text.size());
      if (const Suffix* adj = longest_suffix(w, rv, kAdjective)) {
        w.resize(w.size() - adj->text.size());
        remove_grouped(w, rv, kParticiple);
      } else if (!remove_grouped(w, rv, kVerb)) {
        if (const Suffix* s = longest_suffix(w, rv, kNoun)) w.resize(w.size() - s->text.size());
      }
    }

    // Step 2
    if (w.size() > rv && w.back() == U'и') w.pop_back();

    // Step 3
    if (const Suffix* s = longest_suffix(w, rv, kDerivational);
        s && w.size() - s->text.size() >= r2) {
      w.resize(w.size() - s->text.size());
    }

    // Step 4
    if (const Suffix* s = longest_suffix(w, rv, kTidyUp)) {
      const auto ends_nn = [&] {
        return w.size() >= rv + 2 && w[w.size() - 1] == U'н' && w[w.size() - 2] == U'н';
      };
      switch (s->group) {
        case 1:
          w.resize(w.size() - s->text.size());
          if (ends_nn()) w.pop_back();
          break;
        case 2:
          if (ends_nn()) w.pop_back();
          break;
        default:
          w.pop_back();
      }
    }
  }
};

static_assert(WordStemmer<RussianStemmer>);

}  // namespace kpbench::textproc
