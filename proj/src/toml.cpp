#include "sievebias/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace sievebias {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// strip a trailing comment that is not inside a string literal
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    const char c = s[0];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

double parse_number(const std::string& s, int line, const std::string& origin) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error(origin + ":" + std::to_string(line) + ": malformed number '" + s +
                           "'");
    }
}

}  // namespace

TomlTable TomlTable::parse_string(const std::string& text, const std::string& origin) {
    TomlTable table;
    table.origin_ = origin.empty() ? "<config>" : origin;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                                   ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                                   ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error(table.origin_ + ":" + std::to_string(line_no) + ": empty key");
        if (value.empty())
            throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                               ": missing value for '" + key + "'");

        Value parsed;
        parsed.line = line_no;
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"')
                throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                                   ": unterminated string for '" + key + "'");
            parsed.kind = Value::Kind::string;
            parsed.str = value.substr(1, value.size() - 2);
        } else if (value == "true" || value == "false") {
            parsed.kind = Value::Kind::boolean;
            parsed.flag = (value == "true");
        } else if (value.front() == '[') {
            if (value.back() != ']')
                throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                                   ": unterminated array for '" + key + "'");
            const std::string body = trim(value.substr(1, value.size() - 2));
            parsed.kind = Value::Kind::array_number;
            if (!body.empty()) {
                std::istringstream items(body);
                std::string item;
                bool string_array = false;
                while (std::getline(items, item, ',')) {
                    item = trim(item);
                    if (item.empty())
                        throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                                           ": empty array element for '" + key + "'");
                    if (item.front() == '"') {
                        if (item.size() < 2 || item.back() != '"')
                            throw config_error(table.origin_ + ":" +
                                               std::to_string(line_no) +
                                               ": unterminated string in array for '" + key +
                                               "'");
                        string_array = true;
                        parsed.strings.push_back(item.substr(1, item.size() - 2));
                    } else {
                        parsed.numbers.push_back(
                            parse_number(item, line_no, table.origin_));
                    }
                }
                if (string_array && !parsed.numbers.empty())
                    throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                                       ": mixed array types for '" + key + "'");
                parsed.kind = string_array ? Value::Kind::array_string
                                           : Value::Kind::array_number;
            }
        } else if (looks_numeric(value)) {
            parsed.kind = Value::Kind::number;
            parsed.num = parse_number(value, line_no, table.origin_);
        } else {
            throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                               ": unrecognized value '" + value + "' for '" + key + "'");
        }

        const std::string full_key = section.empty() ? key : section + "." + key;
        if (table.values_.count(full_key))
            throw config_error(table.origin_ + ":" + std::to_string(line_no) +
                               ": duplicate key '" + full_key + "'");
        table.values_.emplace(full_key, std::move(parsed));
    }
    return table;
}

TomlTable TomlTable::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path.string());
}

void TomlTable::missing(const std::string& key) const {
    throw config_error(origin_ + ": missing required field '" + key + "'");
}

const TomlTable::Value& TomlTable::require(const std::string& key, Value::Kind kind) const {
    const auto it = values_.find(key);
    if (it == values_.end()) missing(key);
    const Value& v = it->second;
    const bool ok =
        v.kind == kind ||
        (kind == Value::Kind::array_number && v.kind == Value::Kind::array_string &&
         v.strings.empty());
    if (!ok)
        throw config_error(origin_ + ":" + std::to_string(v.line) + ": field '" + key +
                           "' has the wrong type");
    return v;
}

std::string TomlTable::get_string(const std::string& key) const {
    return require(key, Value::Kind::string).str;
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    return get_string(key);
}

double TomlTable::get_double(const std::string& key) const {
    return require(key, Value::Kind::number).num;
}

double TomlTable::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return get_double(key);
}

long long TomlTable::get_int(const std::string& key) const {
    const Value& v = require(key, Value::Kind::number);
    const auto rounded = static_cast<long long>(v.num);
    if (static_cast<double>(rounded) != v.num)
        throw config_error(origin_ + ":" + std::to_string(v.line) + ": field '" + key +
                           "' must be an integer");
    return rounded;
}

long long TomlTable::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    return get_int(key);
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    return require(key, Value::Kind::boolean).flag;
}

std::vector<double> TomlTable::get_number_array(const std::string& key) const {
    return require(key, Value::Kind::array_number).numbers;
}

std::vector<std::string> TomlTable::get_string_array(const std::string& key) const {
    return require(key, Value::Kind::array_string).strings;
}

std::vector<std::string> TomlTable::keys_under(const std::string& section) const {
    std::vector<std::string> out;
    const std::string prefix = section + ".";
    for (const auto& [key, value] : values_)
        if (key.rfind(prefix, 0) == 0) out.push_back(key);
    return out;
}

}  // namespace sievebias
