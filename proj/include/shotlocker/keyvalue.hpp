#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace shotlocker::kv {

// Flat `key = value` documents. Values may be double-quoted, in which case
// \n, \t, \\ and \" are unescaped. Lines starting with '#' are comments.
class Document {
 public:
  static Document parse(const std::string& content, const std::string& origin = "<string>");
  static Document load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;

  bool get_bool(const std::string& key, bool fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

  /// Serializes with every value quoted and escaped; parse(serialize()) is lossless.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

std::vector<std::string> split_list(const std::string& value);
std::string quote(const std::string& raw);

}  // namespace shotlocker::kv
