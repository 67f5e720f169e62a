#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace convsim {

// Minimal line-oriented `key = value` config format shared by the parameter
// recipes and the simulation config (docs/file_formats.md):
//   - one assignment per line, keys match [A-Za-z0-9_.]+
//   - full-line comments start with '#'; an inline comment needs " #"
//   - arrays are bracketed and comma separated: k = [1, 2, 3]
//   - duplicate keys are an error
// Consumers call reject_unused() after reading so typos fail loudly.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_array(const std::string& key);

  // Paths are resolved relative to the config file's directory.
  std::filesystem::path get_path(const std::string& key);
  std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback);

  // Inserts or replaces a value (used for command-line overrides).
  void set(const std::string& key, const std::string& value);

  // Throws ParseError listing keys that were never read.
  void reject_unused() const;

  const std::filesystem::path& origin_dir() const { return origin_dir_; }

 private:
  std::string raw(const std::string& key);
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
  std::string origin_;
  std::filesystem::path origin_dir_;
};

}  // namespace convsim
