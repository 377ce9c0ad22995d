#include "cardioflow/common/toml.hpp"

#include "cardioflow/common/error.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cardioflow::toml {

Value Value::make_string(std::string s) {
  Value v;
  v.kind_ = Kind::String;
  v.string_ = std::move(s);
  return v;
}

Value Value::make_number(double x) {
  Value v;
  v.kind_ = Kind::Number;
  v.number_ = x;
  return v;
}

Value Value::make_boolean(bool b) {
  Value v;
  v.kind_ = Kind::Boolean;
  v.boolean_ = b;
  return v;
}

Value Value::make_array(Array a) {
  Value v;
  v.kind_ = Kind::Array;
  v.array_ = std::move(a);
  return v;
}

Value Value::make_table(Table t) {
  Value v;
  v.kind_ = Kind::Table;
  v.table_ = std::move(t);
  return v;
}

const std::string& Value::as_string() const {
  if (!is_string())
    throw ParseError("toml: value is not a string");
  return string_;
}

double Value::as_number() const {
  if (!is_number())
    throw ParseError("toml: value is not a number");
  return number_;
}

bool Value::as_boolean() const {
  if (!is_boolean())
    throw ParseError("toml: value is not a boolean");
  return boolean_;
}

const Array& Value::as_array() const {
  if (!is_array())
    throw ParseError("toml: value is not an array");
  return array_;
}

Array& Value::as_array() {
  if (!is_array())
    throw ParseError("toml: value is not an array");
  return array_;
}

const Table& Value::as_table() const {
  if (!is_table())
    throw ParseError("toml: value is not a table");
  return table_;
}

Table& Value::as_table() {
  if (!is_table())
    throw ParseError("toml: value is not a table");
  return table_;
}

std::vector<double> Value::as_numbers() const {
  std::vector<double> out;
  for (const auto& v : as_array())
    out.push_back(v.as_number());
  return out;
}

std::vector<std::string> Value::as_strings() const {
  std::vector<std::string> out;
  for (const auto& v : as_array())
    out.push_back(v.as_string());
  return out;
}

namespace {

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  Table run() {
    Table root;
    Table* current = &root;
    while (true) {
      skip_blank_lines();
      if (eof())
        break;
      if (peek() == '[') {
        const bool array_of_tables = peek(1) == '[';
        pos_ += array_of_tables ? 2 : 1;
        auto keys = parse_key_path();
        skip_inline_ws();
        expect(']');
        if (array_of_tables)
          expect(']');
        end_of_line();
        current = array_of_tables ? &open_array_table(root, keys) : &open_table(root, keys);
        continue;
      }
      auto keys = parse_key_path();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      Value v = parse_value();
      end_of_line();
      Table* target = keys.size() > 1 ? &open_table(*current, {keys.begin(), keys.end() - 1}) : current;
      if (target->count(keys.back()))
        fail("duplicate key '" + keys.back() + "'");
      target->emplace(keys.back(), std::move(v));
    }
    return root;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;

  bool eof() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  char get() {
    const char c = text_[pos_++];
    if (c == '\n')
      ++line_;
    return c;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("toml line " + std::to_string(line_) + ": " + msg);
  }

  void expect(char c) {
    if (peek() != c)
      fail(std::string("expected '") + c + "'");
    get();
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t'))
      get();
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n')
        get();
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        get();
      else
        break;
    }
  }

  // Whitespace, comments and newlines inside arrays and inline tables.
  void skip_any_ws() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
        get();
      else if (c == '#')
        skip_comment();
      else
        break;
    }
  }

  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (peek() == '\r')
      get();
    if (!eof() && peek() != '\n')
      fail("unexpected trailing characters");
    if (!eof())
      get();
  }

  std::string parse_key() {
    skip_inline_ws();
    if (peek() == '"' || peek() == '\'')
      return parse_string();
    std::string key;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      key += get();
    if (key.empty())
      fail("expected key");
    return key;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> keys{parse_key()};
    skip_inline_ws();
    while (peek() == '.') {
      get();
      keys.push_back(parse_key());
      skip_inline_ws();
    }
    return keys;
  }

  std::string parse_string() {
    const char quote = get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n')
        fail("unterminated string");
      char c = get();
      if (c == quote)
        break;
      if (c == '\\' && quote == '"') {
        const char e = get();
        switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  Value parse_value() {
    const char c = peek();
    if (c == '"' || c == '\'')
      return Value::make_string(parse_string());
    if (c == '[')
      return parse_array();
    if (c == '{')
      return parse_inline_table();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return Value::make_boolean(true);
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return Value::make_boolean(false);
    }
    return Value::make_number(parse_number());
  }

  double parse_number() {
    std::string token;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      token += get();
    std::string cleaned;
    for (char ch : token)
      if (ch != '_')
        cleaned += ch;
    if (cleaned == "inf" || cleaned == "+inf")
      return INFINITY;
    if (cleaned == "-inf")
      return -INFINITY;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(cleaned, &used);
    } catch (...) {
      fail("invalid value '" + token + "'");
    }
    if (used != cleaned.size())
      fail("invalid number '" + token + "'");
    return x;
  }

  Value parse_array() {
    expect('[');
    Array items;
    skip_any_ws();
    while (peek() != ']') {
      items.push_back(parse_value());
      skip_any_ws();
      if (peek() == ',') {
        get();
        skip_any_ws();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    get();
    return Value::make_array(std::move(items));
  }

  Value parse_inline_table() {
    expect('{');
    Table t;
    skip_inline_ws();
    while (peek() != '}') {
      auto key = parse_key();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      t.emplace(key, parse_value());
      skip_inline_ws();
      if (peek() == ',') {
        get();
        skip_inline_ws();
      } else if (peek() != '}') {
        fail("expected ',' or '}' in inline table");
      }
    }
    get();
    return Value::make_table(std::move(t));
  }

  Table& open_table(Table& root, const std::vector<std::string>& keys) {
    Table* t = &root;
    for (const auto& k : keys) {
      auto it = t->find(k);
      if (it == t->end())
        it = t->emplace(k, Value::make_table()).first;
      if (it->second.is_array() && !it->second.as_array().empty() && it->second.as_array().back().is_table())
        t = &it->second.as_array().back().as_table();
      else if (it->second.is_table())
        t = &it->second.as_table();
      else
        fail("key '" + k + "' is not a table");
    }
    return *t;
  }

  Table& open_array_table(Table& root, const std::vector<std::string>& keys) {
    Table& parent = keys.size() > 1 ? open_table(root, {keys.begin(), keys.end() - 1}) : root;
    auto it = parent.find(keys.back());
    if (it == parent.end())
      it = parent.emplace(keys.back(), Value::make_array()).first;
    if (!it->second.is_array())
      fail("key '" + keys.back() + "' is not an array of tables");
    it->second.as_array().push_back(Value::make_table());
    return it->second.as_array().back().as_table();
  }
};

} // namespace

Table parse(std::string_view text) { return Parser(text).run(); }

Table parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const Value* find(const Table& root, std::string_view path) {
  const Table* t = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    auto it = t->find(key);
    if (it == t->end())
      return nullptr;
    if (dot == std::string_view::npos)
      return &it->second;
    if (!it->second.is_table())
      return nullptr;
    t = &it->second.as_table();
    start = dot + 1;
  }
}

double get_number(const Table& root, std::string_view path, double fallback) {
  const Value* v = find(root, path);
  return v ? v->as_number() : fallback;
}

double require_number(const Table& root, std::string_view path) {
  const Value* v = find(root, path);
  if (!v)
    throw ParseError("missing required key '" + std::string(path) + "'");
  return v->as_number();
}

std::string get_string(const Table& root, std::string_view path, const std::string& fallback) {
  const Value* v = find(root, path);
  return v ? v->as_string() : fallback;
}

bool get_boolean(const Table& root, std::string_view path, bool fallback) {
  const Value* v = find(root, path);
  return v ? v->as_boolean() : fallback;
}

const Table* find_table(const Table& root, std::string_view path) {
  const Value* v = find(root, path);
  return v && v->is_table() ? &v->as_table() : nullptr;
}

} // namespace cardioflow::toml
