#include "dialeval/toml.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "dialeval/error.hpp"
#include "dialeval/text.hpp"

namespace dialeval::toml {

using nlohmann::json;

namespace {

class Parser {
 public:
  explicit Parser(std::string_view doc) : s_(doc) {}

  json run() {
    json root = json::object();
    json* current = &root;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        current = table_header(root);
      } else {
        key_value(*current);
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view s_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw usage_error("config line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[i_]; }
  char get() {
    const char c = s_[i_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++i_;
  }
  void skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++i_;
      if (peek() == '\n') {
        get();
        continue;
      }
      return;
    }
  }
  /// Whitespace, comments and newlines (inside arrays).
  void skip_all() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++i_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    get();
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts;
    for (;;) {
      skip_ws();
      if (peek() == '"') {
        parts.push_back(basic_string());
      } else if (peek() == '\'') {
        parts.push_back(literal_string());
      } else {
        const std::size_t b = i_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++i_;
        if (b == i_) fail("expected a key");
        parts.emplace_back(s_.substr(b, i_ - b));
      }
      skip_ws();
      if (peek() != '.') return parts;
      ++i_;
    }
  }

  json* descend(json& base, const std::vector<std::string>& path, std::size_t count) {
    json* node = &base;
    for (std::size_t k = 0; k < count; ++k) {
      json& child = (*node)[path[k]];
      if (child.is_null()) child = json::object();
      if (child.is_array() && !child.empty() && child.back().is_object()) {
        node = &child.back();
      } else if (child.is_object()) {
        node = &child;
      } else {
        fail("key '" + path[k] + "' is not a table");
      }
    }
    return node;
  }

  json* table_header(json& root) {
    ++i_;
    const bool array = peek() == '[';
    if (array) ++i_;
    const auto path = key_path();
    if (peek() != ']') fail("expected ']'");
    ++i_;
    if (array) {
      if (peek() != ']') fail("expected ']]'");
      ++i_;
    }
    json* parent = descend(root, path, path.size() - 1);
    json& slot = (*parent)[path.back()];
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) fail("'" + path.back() + "' is not an array of tables");
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (!slot.is_object()) fail("'" + path.back() + "' is not a table");
    return &slot;
  }

  void key_value(json& table) {
    const auto path = key_path();
    if (peek() != '=') fail("expected '='");
    ++i_;
    skip_ws();
    json* target = descend(table, path, path.size() - 1);
    if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*target)[path.back()] = value();
  }

  json value() {
    const char c = peek();
    if (c == '"') {
      if (s_.substr(i_, 3) == "\"\"\"") fail("multi-line strings are not supported");
      return basic_string();
    }
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (s_.substr(i_, 4) == "true") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "false") {
      i_ += 5;
      return false;
    }
    return number();
  }

  std::string basic_string() {
    ++i_;
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) fail("unterminated escape");
      const char e = get();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'u':
        case 'U': {
          const std::size_t len = e == 'u' ? 4 : 8;
          if (i_ + len > s_.size()) fail("truncated unicode escape");
          unsigned long cp = 0;
          const auto* first = s_.data() + i_;
          auto [ptr, ec] = std::from_chars(first, first + len, cp, 16);
          if (ec != std::errc() || ptr != first + len) fail("bad unicode escape");
          i_ += len;
          text::append_utf8(out, static_cast<char32_t>(cp));
          break;
        }
        default:
          fail(std::string("unknown escape '\\") + e + "'");
      }
    }
  }

  std::string literal_string() {
    ++i_;
    const std::size_t b = i_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++i_;
    if (peek() != '\'') fail("unterminated literal string");
    std::string out(s_.substr(b, i_ - b));
    ++i_;
    return out;
  }

  json number() {
    const std::size_t b = i_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++i_;
    std::string tok;
    for (char c : s_.substr(b, i_ - b))
      if (c != '_') tok.push_back(c);
    if (tok.empty()) fail("expected a value");
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* first = tok.data() + (tok.front() == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (is_float) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) fail("bad number '" + tok + "'");
      return v;
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail("bad value '" + tok + "'");
    return v;
  }

  json array() {
    ++i_;
    json out = json::array();
    for (;;) {
      skip_all();
      if (peek() == ']') {
        ++i_;
        return out;
      }
      out.push_back(value());
      skip_all();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']' in array");
    }
  }

  json inline_table() {
    ++i_;
    json out = json::object();
    skip_ws();
    if (peek() == '}') {
      ++i_;
      return out;
    }
    for (;;) {
      key_value(out);
      skip_ws();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      if (peek() != '}') fail("expected ',' or '}' in inline table");
      ++i_;
      return out;
    }
  }
};

}  // namespace

json parse(std::string_view document) { return Parser(document).run(); }

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const Error& e) {
    throw usage_error(path.string() + ": " + e.what());
  }
}

}  // namespace dialeval::toml
