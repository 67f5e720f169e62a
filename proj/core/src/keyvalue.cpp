#include "convsim/keyvalue.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "convsim/error.hpp"

namespace convsim {
namespace {

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strips an inline comment. '#' only starts a comment at the beginning of the
// line or after whitespace, so values like "a#b" survive.
std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '#') continue;
    if (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1]))) {
      return line.substr(0, i);
    }
  }
  return line;
}

double parse_double_token(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  if (t.empty()) throw ParseError(context + ": empty numeric value");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw ParseError(context + ": not a number: '" + t + "'");
  }
  return v;
}

std::int64_t parse_int_token(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  if (t.empty()) throw ParseError(context + ": empty integer value");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw ParseError(context + ": not an integer: '" + t + "'");
  }
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  cfg.origin_dir_ = ".";

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;

    const std::string where = origin + ":" + std::to_string(lineno);
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError(where + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(where + ": empty key");
    for (char c : key) {
      if (!is_key_char(c)) {
        throw ParseError(where + ": invalid key '" + key + "'");
      }
    }
    if (value.empty()) throw ParseError(where + ": empty value for '" + key + "'");
    if (cfg.values_.count(key) != 0) {
      throw ParseError(where + ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  KeyValueConfig cfg = parse_string(buf.str(), path.string());
  cfg.origin_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string KeyValueConfig::raw(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ParseError(origin_ + ": missing required key '" + key + "'");
  }
  used_.insert(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key) {
  return raw(key);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
  if (!has(key)) return fallback;
  return raw(key);
}

double KeyValueConfig::get_double(const std::string& key) {
  return parse_double_token(raw(key), origin_ + ": key '" + key + "'");
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  return get_double(key);
}

std::int64_t KeyValueConfig::get_int(const std::string& key) {
  return parse_int_token(raw(key), origin_ + ": key '" + key + "'");
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) {
  if (!has(key)) return fallback;
  return get_int(key);
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) return fallback;
  const std::string context = origin_ + ": key '" + key + "'";
  const std::string t = trim(raw(key));
  if (t.empty()) throw ParseError(context + ": empty integer value");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE || t[0] == '-') {
    throw ParseError(context + ": not an unsigned integer: '" + t + "'");
  }
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError(origin_ + ": key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> KeyValueConfig::get_double_array(const std::string& key) {
  const std::string context = origin_ + ": key '" + key + "'";
  std::string v = raw(key);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ParseError(context + ": expected bracketed array like [1, 2, 3]");
  }
  v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::string token;
  for (char c : v) {
    if (c == ',') {
      out.push_back(parse_double_token(token, context));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!trim(token).empty()) out.push_back(parse_double_token(token, context));
  if (out.empty()) throw ParseError(context + ": empty array");
  return out;
}

std::filesystem::path KeyValueConfig::get_path(const std::string& key) {
  std::filesystem::path p(raw(key));
  if (p.is_relative()) p = origin_dir_ / p;
  return p;
}

std::filesystem::path KeyValueConfig::get_path(const std::string& key, const std::filesystem::path& fallback) {
  if (!has(key)) return fallback;
  return get_path(key);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void KeyValueConfig::reject_unused() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (used_.count(key) != 0) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += key;
  }
  if (!unknown.empty()) {
    throw ParseError(origin_ + ": unknown keys: " + unknown);
  }
}

}  // namespace convsim
