#include "granq/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "granq/csv.hpp"
#include "granq/error.hpp"

namespace granq::toml {
namespace {

using nlohmann::json;

class Parser {
 public:
  Parser(std::string_view text, std::string_view source) : s_(text), source_(source) {}

  json run() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        bool array = s_.substr(pos_, 2) == "[[";
        pos_ += array ? 2 : 1;
        auto path = parse_key_path();
        skip_inline_ws();
        expect(array ? "]]" : "]");
        table = array ? &append_table_array(root, path) : &open_table(root, path);
      } else {
        auto path = parse_key_path();
        skip_inline_ws();
        expect("=");
        skip_inline_ws();
        json value = parse_value();
        json* target = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
          json& next = (*target)[path[i]];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("key '" + path[i] + "' is not a table");
          target = &next;
        }
        if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*target)[path.back()] = std::move(value);
      }
      skip_inline_ws();
      if (!eof() && peek() == '#') skip_comment();
      if (!eof() && peek() != '\n' && peek() != '\r') fail("expected end of line");
    }
    return root;
  }

 private:
  std::string_view s_;
  std::string_view source_;
  std::size_t pos_ = 0;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  std::size_t line() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) n += s_[i] == '\n';
    return n;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(std::string(source_) + ":" + std::to_string(line()) + ": " + msg);
  }

  void expect(std::string_view tok) {
    if (s_.substr(pos_, tok.size()) != tok) fail("expected '" + std::string(tok) + "'");
    pos_ += tok.size();
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  std::string parse_key() {
    skip_inline_ws();
    if (eof()) fail("expected key");
    if (peek() == '"' || peek() == '\'') return parse_string();
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (start == pos_) fail("expected key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key()};
    skip_inline_ws();
    while (!eof() && peek() == '.') {
      ++pos_;
      path.push_back(parse_key());
      skip_inline_ws();
    }
    return path;
  }

  json& open_table(json& root, const std::vector<std::string>& path) {
    json* t = &root;
    for (const auto& k : path) {
      json& next = (*t)[k];
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        t = &next.back();
        continue;
      }
      if (!next.is_object()) fail("'" + k + "' is not a table");
      t = &next;
    }
    return *t;
  }

  json& append_table_array(json& root, const std::vector<std::string>& path) {
    json* t = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& next = (*t)[path[i]];
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty()) {
        t = &next.back();
        continue;
      }
      t = &next;
    }
    json& arr = (*t)[path.back()];
    if (arr.is_null()) arr = json::array();
    if (!arr.is_array()) fail("'" + path.back() + "' is not an array of tables");
    arr.push_back(json::object());
    return arr.back();
  }

  std::string parse_string() {
    char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        if (eof()) fail("unterminated escape");
        char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\': out += '\\'; break;
          case '"': out += '"'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json parse_value() {
    if (eof()) fail("expected value");
    char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      while (true) {
        skip_ws_comments_newlines();
        if (eof()) fail("unterminated array");
        if (peek() == ']') {
          ++pos_;
          break;
        }
        arr.push_back(parse_value());
        skip_ws_comments_newlines();
        if (!eof() && peek() == ',') {
          ++pos_;
        } else if (!eof() && peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      return arr;
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_inline_ws();
      if (!eof() && peek() == '}') {
        ++pos_;
        return obj;
      }
      while (true) {
        auto key = parse_key();
        skip_inline_ws();
        expect("=");
        skip_inline_ws();
        obj[key] = parse_value();
        skip_inline_ws();
        if (!eof() && peek() == ',') {
          ++pos_;
          continue;
        }
        expect("}");
        break;
      }
      return obj;
    }
    std::size_t start = pos_;
    while (!eof() && peek() != ',' && peek() != ']' && peek() != '}' && peek() != '\n' && peek() != '\r' &&
           peek() != '#' && peek() != ' ' && peek() != '\t') {
      ++pos_;
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string clean;
    for (char ch : tok) {
      if (ch != '_') clean += ch;
    }
    if (clean.find_first_of(".eE") == std::string::npos || clean == "inf" || clean == "nan") {
      if (auto i = csv::parse_int(clean); i && clean.find_first_of(".eE") == std::string::npos) return *i;
    }
    if (auto d = csv::parse_double(clean)) return *d;
    fail("cannot parse value '" + tok + "'");
  }
};

}  // namespace

nlohmann::json parse(std::string_view text, std::string_view source) { return Parser(text, source).run(); }

nlohmann::json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

}  // namespace granq::toml
