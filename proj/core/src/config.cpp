// SPDX-License-Identifier: Apache-2.0
#include "geofno/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "geofno/error.hpp"

namespace geofno {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string qualified(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got '" + line + "'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    cfg.sections_[section][key] = trim(std::string_view(line).substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void ConfigFile::set(const std::string& section, const std::string& key, std::string value) {
  sections_[section][key] = std::move(value);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  const auto* v = find(section, key);
  return v ? *v : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  char* end = nullptr;
  const double d = std::strtod(v->c_str(), &end);
  if (v->empty() || *end != '\0') throw ConfigError("key " + qualified(section, key) + ": not a number: " + *v);
  return d;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key, long long fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError("key " + qualified(section, key) + ": not an integer: " + *v);
  }
  return out;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("key " + qualified(section, key) + ": not a boolean: " + *v);
}

std::vector<long long> ConfigFile::get_int_list(const std::string& section, const std::string& key,
                                                const std::vector<long long>& fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  std::vector<long long> out;
  std::string item;
  std::istringstream is(*v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    long long x = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError("key " + qualified(section, key) + ": not an integer list: " + *v);
    }
    out.push_back(x);
  }
  return out;
}

void ConfigFile::require_known(const std::string& section, const std::set<std::string>& allowed) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return;
  for (const auto& [key, value] : s->second) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + qualified(section, key) + "'");
  }
}

void ConfigFile::require_sections(const std::set<std::string>& allowed) const {
  for (const auto& [name, body] : sections_) {
    if (!allowed.count(name)) throw ConfigError("unknown config section '[" + name + "]'");
  }
}

std::string ConfigFile::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, body] : sections_) {
    if (!name.empty()) {
      if (!first) os << '\n';
      os << '[' << name << "]\n";
    }
    for (const auto& [k, v] : body) os << k << " = " << v << '\n';
    first = false;
  }
  return os.str();
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace geofno
