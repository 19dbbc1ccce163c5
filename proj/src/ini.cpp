#include "twr/ini.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "twr/textio.hpp"

namespace twr {

namespace {

void parse_into(std::istream& in, const std::string& origin,
                std::map<std::string, std::string>& values, std::vector<std::string>& order) {
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (!values.count(full)) order.push_back(full);
    values[full] = value;
  }
}

}  // namespace

IniFile IniFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  IniFile f;
  f.dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  parse_into(in, path.string(), f.values_, f.order_);
  return f;
}

IniFile IniFile::from_string(const std::string& text) {
  std::istringstream in(text);
  IniFile f;
  f.dir_ = ".";
  parse_into(in, "<string>", f.values_, f.order_);
  return f;
}

bool IniFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string IniFile::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string IniFile::require_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("missing required config key: " + key);
  return it->second;
}

double IniFile::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second, key);
}

long long IniFile::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_int(it->second, key);
}

unsigned long long IniFile::get_uint(const std::string& key, unsigned long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long long v = parse_int(it->second, key);
  if (v < 0) throw std::runtime_error("config key must be non-negative: " + key);
  return static_cast<unsigned long long>(v);
}

bool IniFile::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key is not a boolean: " + key + " = " + v);
}

std::vector<double> IniFile::get_double_list(const std::string& key,
                                             const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& tok : split_ws(it->second)) out.push_back(parse_double(tok, key));
  return out;
}

std::vector<std::string> IniFile::get_string_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return split_ws(it->second);
}

std::vector<std::string> IniFile::section_keys(const std::string& section) const {
  std::vector<std::string> out;
  std::string prefix = section + ".";
  for (const auto& full : order_)
    if (full.rfind(prefix, 0) == 0) out.push_back(full.substr(prefix.size()));
  return out;
}

}  // namespace twr
