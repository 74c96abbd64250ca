// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace geofno {

/// Flat INI-style configuration: `[section]` headers and `key = value`
/// lines, `#` or `;` comments. Keys before the first header belong to the
/// section "".
class ConfigFile {
 public:
  using Section = std::map<std::string, std::string>;

  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::string* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, std::string value);

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<long long> get_int_list(const std::string& section, const std::string& key,
                                      const std::vector<long long>& fallback) const;

  /// Throws ConfigError naming the first key of `section` outside `allowed`.
  void require_known(const std::string& section, const std::set<std::string>& allowed) const;
  /// Throws ConfigError naming the first section outside `allowed`.
  void require_sections(const std::set<std::string>& allowed) const;

  const std::map<std::string, Section>& sections() const { return sections_; }
  std::string to_string() const;

 private:
  std::map<std::string, Section> sections_;
};

/// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace geofno
