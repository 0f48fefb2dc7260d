#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kpbench/error.hpp"

namespace kpbench::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

/// RFC-4180 reader: quoted fields may contain commas, doubled quotes and line
/// breaks; CRLF and LF are both accepted as record terminators.
inline std::vector<Record> parse(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_content = false;

  const auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  const auto end_record = [&] {
    end_field();
    if (record_has_content || current.fields.size() > 1 || !current.fields.front().empty())
      records.push_back(std::move(current));
    current = Record{};
    current.line = line;
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw ParseError(current.line, "unexpected quote inside unquoted field");
        in_quotes = true;
        field_was_quoted = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        ++line;
        end_record();
        break;
      default:
        if (field_was_quoted) throw ParseError(current.line, "text after closing quote");
        field.push_back(c);
        record_has_content = true;
    }
  }
  if (in_quotes) throw ParseError(current.line, "unterminated quoted field");
  if (record_has_content || !field.empty()) end_record();
  return records;
}

/// Quotes a field when it contains a delimiter, quote, or line break.
inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace kpbench::csv
