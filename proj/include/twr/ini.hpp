#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace twr {

// Minimal INI reader: [section] headers, key = value lines, # or ; comment
// lines, blank lines ignored. Values keep internal spaces; lists are
// whitespace-separated. Keys are addressed as "section.key".
class IniFile {
 public:
  static IniFile load(const std::filesystem::path& path);
  static IniFile from_string(const std::string& text);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  unsigned long long get_uint(const std::string& key, unsigned long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) const;

  // Keys of one section, in file order. Used for open-ended sections.
  std::vector<std::string> section_keys(const std::string& section) const;

  // Directory of the loaded file; anchor for relative paths in values.
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  std::filesystem::path dir_;
};

}  // namespace twr
