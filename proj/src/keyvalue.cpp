#include "shotlocker/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "shotlocker/error.hpp"

namespace shotlocker::kv {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string parse_error(const std::string& origin, std::size_t line, const std::string& what) {
  return origin + ":" + std::to_string(line) + ": " + what;
}

std::string unquote(const std::string& raw, const std::string& origin, std::size_t line) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
    throw Error(ErrorCode::parse, parse_error(origin, line, "unterminated quoted value"));
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (i + 2 >= raw.size()) {
      throw Error(ErrorCode::parse, parse_error(origin, line, "dangling escape"));
    }
    switch (raw[++i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '\\': out.push_back('\\'); break;
      case '"': out.push_back('"'); break;
      default:
        throw Error(ErrorCode::parse, parse_error(origin, line, "unknown escape"));
    }
  }
  return out;
}

}  // namespace

Document Document::parse(const std::string& content, const std::string& origin) {
  Document doc;
  doc.origin_ = origin;
  std::istringstream in(content);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::parse, parse_error(origin, number, "expected key = value"));
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::parse, parse_error(origin, number, "empty key"));
    if (!value.empty() && value.front() == '"') value = unquote(value, origin, number);
    if (!doc.values_.emplace(key, std::move(value)).second) {
      throw Error(ErrorCode::parse, parse_error(origin, number, "duplicate key '" + key + "'"));
    }
  }
  return doc;
}

Document Document::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::optional<std::string> Document::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Document::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::string Document::require(const std::string& key) const {
  auto value = get(key);
  if (!value) throw Error(ErrorCode::parse, origin_ + ": missing key '" + key + "'");
  return *value;
}

bool Document::get_bool(const std::string& key, bool fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1" || *value == "yes" || *value == "on") return true;
  if (*value == "false" || *value == "0" || *value == "no" || *value == "off") return false;
  throw Error(ErrorCode::parse, origin_ + ": '" + key + "' is not a boolean: " + *value);
}

long long Document::get_int(const std::string& key, long long fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc{} || ptr != value->data() + value->size()) {
    throw Error(ErrorCode::parse, origin_ + ": '" + key + "' is not an integer: " + *value);
  }
  return out;
}

double Document::get_double(const std::string& key, double fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  double out = 0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc{} || ptr != value->data() + value->size()) {
    throw Error(ErrorCode::parse, origin_ + ": '" + key + "' is not a number: " + *value);
  }
  return out;
}

std::vector<std::string> Document::get_list(const std::string& key) const {
  auto value = get(key);
  if (!value) return {};
  return split_list(*value);
}

std::string Document::serialize() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += quote(value);
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string::npos) comma = value.size();
    std::string item = trim(std::string_view(value).substr(start, comma - start));
    if (!item.empty()) items.push_back(std::move(item));
    start = comma + 1;
  }
  return items;
}

std::string quote(const std::string& raw) {
  std::string out = "\"";
  for (char c : raw) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace shotlocker::kv
