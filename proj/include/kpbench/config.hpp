#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>

#include <json.hpp>

#include "kpbench/error.hpp"
#include "kpbench/textproc/utf8.hpp"

namespace kpbench::config {

/// Parses the small TOML subset used by experiment files into JSON:
/// `key = value` pairs, `[table]`, `[[array_of_tables]]`, `#` comments.
/// Values: basic and literal strings, integers, floats, booleans, and
/// single-line arrays of those. Dotted keys, inline tables, dates and
/// multi-line strings are rejected.
class TomlLite {
 public:
  static nlohmann::json parse(std::string_view text) {
    TomlLite p(text);
    return p.run();
  }

 private:
  explicit TomlLite(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  nlohmann::json run() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    std::size_t pos = 0;
    while (pos < text_.size()) {
      std::size_t eol = text_.find('\n', pos);
      if (eol == std::string_view::npos) eol = text_.size();
      ++line_;
      cur_ = text_.substr(pos, eol - pos);
      at_ = 0;
      pos = eol + 1;

      skip_ws();
      if (done()) continue;
      if (cur_.substr(at_).starts_with("[[")) {
        at_ += 2;
        const std::string name = bare_key();
        expect("]]");
        end_of_line();
        auto& arr = root[name];
        if (arr.is_null()) arr = nlohmann::json::array();
        if (!arr.is_array()) fail("'" + name + "' is not an array of tables");
        arr.push_back(nlohmann::json::object());
        table = &arr.back();
        continue;
      }
      if (cur_[at_] == '[') {
        ++at_;
        const std::string name = bare_key();
        expect("]");
        end_of_line();
        if (root.contains(name)) fail("duplicate table [" + name + "]");
        root[name] = nlohmann::json::object();
        table = &root[name];
        continue;
      }
      const std::string key = bare_key();
      expect("=");
      nlohmann::json value = parse_value();
      end_of_line();
      if (table->contains(key)) fail("duplicate key '" + key + "'");
      (*table)[key] = std::move(value);
    }
    return root;
  }

  bool done() const { return at_ >= cur_.size() || cur_[at_] == '#'; }

  void skip_ws() {
    while (at_ < cur_.size() && (cur_[at_] == ' ' || cur_[at_] == '\t' || cur_[at_] == '\r'))
      ++at_;
  }

  void end_of_line() {
    skip_ws();
    if (!done()) fail("unexpected text '" + std::string(cur_.substr(at_)) + "'");
  }

  void expect(std::string_view s) {
    skip_ws();
    if (!cur_.substr(at_).starts_with(s)) fail("expected '" + std::string(s) + "'");
    at_ += s.size();
    skip_ws();
  }

  std::string bare_key() {
    skip_ws();
    const std::size_t start = at_;
    while (at_ < cur_.size() && (std::isalnum(static_cast<unsigned char>(cur_[at_])) ||
                                 cur_[at_] == '_' || cur_[at_] == '-'))
      ++at_;
    if (at_ == start) fail("expected a key");
    if (at_ < cur_.size() && cur_[at_] == '.') fail("dotted keys are not supported");
    return std::string(cur_.substr(start, at_ - start));
  }

  nlohmann::json parse_value() {
    skip_ws();
    if (at_ >= cur_.size()) fail("missing value");
    const char c = cur_[at_];
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') {
      ++at_;
      nlohmann::json arr = nlohmann::json::array();
      skip_ws();
      if (at_ < cur_.size() && cur_[at_] == ']') {
        ++at_;
        return arr;
      }
      while (true) {
        arr.push_back(parse_value());
        skip_ws();
        if (at_ >= cur_.size()) fail("unterminated array (arrays must fit on one line)");
        if (cur_[at_] == ',') {
          ++at_;
          skip_ws();
          if (at_ < cur_.size() && cur_[at_] == ']') {
            ++at_;
            return arr;
          }
          continue;
        }
        if (cur_[at_] == ']') {
          ++at_;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (c == '{') fail("inline tables are not supported");
    const std::size_t start = at_;
    while (at_ < cur_.size() && cur_[at_] != ',' && cur_[at_] != ']' && cur_[at_] != '#' &&
           cur_[at_] != ' ' && cur_[at_] != '\t' && cur_[at_] != '\r')
      ++at_;
    std::string tok(cur_.substr(start, at_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char d : tok)
      if (d != '_') digits += d;
    if (digits.empty()) fail("missing value");
    try {
      std::size_t used = 0;
      if (digits.find_first_of(".eE") == std::string::npos ||
          digits.starts_with("0x")) {
        const long long v = std::stoll(digits, &used, digits.starts_with("0x") ? 16 : 10);
        if (used == digits.size()) return v;
      } else {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("bad value '" + tok + "'");
  }

  std::string literal_string() {
    ++at_;
    const std::size_t close = cur_.find('\'', at_);
    if (close == std::string_view::npos) fail("unterminated string");
    std::string out(cur_.substr(at_, close - at_));
    at_ = close + 1;
    return out;
  }

  std::string basic_string() {
    ++at_;
    std::string out;
    while (true) {
      if (at_ >= cur_.size()) fail("unterminated string");
      const char c = cur_[at_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_ >= cur_.size()) fail("unterminated escape");
      const char e = cur_[at_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'u':
        case 'U': {
          const std::size_t n = e == 'u' ? 4 : 8;
          if (at_ + n > cur_.size()) fail("short unicode escape");
          const std::string hex(cur_.substr(at_, n));
          at_ += n;
          char* end = nullptr;
          const unsigned long cp = std::strtoul(hex.c_str(), &end, 16);
          if (*end) fail("bad unicode escape");
          utf8::append(out, static_cast<char32_t>(cp));
          break;
        }
        default: fail(std::string("unknown escape \\") + e);
      }
    }
  }

  std::string_view text_;
  std::string_view cur_;
  std::size_t at_ = 0;
  std::size_t line_ = 0;
};

}  // namespace kpbench::config
