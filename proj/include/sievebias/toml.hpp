#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sievebias/errors.hpp"

namespace sievebias {

// Minimal TOML subset for experiment configs: [section] tables, key = value
// with strings, integers, floats, booleans, and flat arrays, plus # comments.
// Keys flatten to "section.key". Every value remembers its source line so
// config errors can point at it.
class TomlTable {
  public:
    struct Value {
        enum class Kind { string, number, boolean, array_number, array_string };
        Kind kind = Kind::string;
        std::string str;
        double num = 0.0;
        bool flag = false;
        std::vector<double> numbers;
        std::vector<std::string> strings;
        int line = 0;
    };

    static TomlTable parse_file(const std::filesystem::path& path);
    static TomlTable parse_string(const std::string& text, const std::string& origin = "");

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_number_array(const std::string& key) const;
    std::vector<std::string> get_string_array(const std::string& key) const;

    // all keys currently present under "section."
    std::vector<std::string> keys_under(const std::string& section) const;

    [[noreturn]] void missing(const std::string& key) const;

  private:
    const Value& require(const std::string& key, Value::Kind kind) const;
    std::map<std::string, Value> values_;
    std::string origin_;
};

}  // namespace sievebias
