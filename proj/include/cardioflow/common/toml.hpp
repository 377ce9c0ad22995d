#pragma once

// Reader for the subset of TOML used by run configs, parameter tables and
// biomarker range files: tables, dotted table headers, arrays of tables,
// inline tables, strings, numbers, booleans and (nested) arrays.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cardioflow::toml {

class Value;
using Table = std::map<std::string, Value>;
using Array = std::vector<Value>;

class Value {
public:
  enum class Kind { String, Number, Boolean, Array, Table };

  Value() : kind_(Kind::Table) {}
  static Value make_string(std::string s);
  static Value make_number(double x);
  static Value make_boolean(bool b);
  static Value make_array(Array a = {});
  static Value make_table(Table t = {});

  Kind kind() const { return kind_; }
  bool is_string() const { return kind_ == Kind::String; }
  bool is_number() const { return kind_ == Kind::Number; }
  bool is_boolean() const { return kind_ == Kind::Boolean; }
  bool is_array() const { return kind_ == Kind::Array; }
  bool is_table() const { return kind_ == Kind::Table; }

  const std::string& as_string() const;
  double as_number() const;
  bool as_boolean() const;
  const Array& as_array() const;
  Array& as_array();
  const Table& as_table() const;
  Table& as_table();

  /// Numeric array (one level) as doubles.
  std::vector<double> as_numbers() const;
  std::vector<std::string> as_strings() const;

private:
  Kind kind_;
  std::string string_;
  double number_ = 0.0;
  bool boolean_ = false;
  Array array_;
  Table table_;
};

Table parse(std::string_view text);
Table parse_file(const std::filesystem::path& path);

// Lookup helpers. `path` may be dotted ("coupling.dt").
const Value* find(const Table& root, std::string_view path);
double get_number(const Table& root, std::string_view path, double fallback);
double require_number(const Table& root, std::string_view path);
std::string get_string(const Table& root, std::string_view path, const std::string& fallback);
bool get_boolean(const Table& root, std::string_view path, bool fallback);
const Table* find_table(const Table& root, std::string_view path);

} // namespace cardioflow::toml
