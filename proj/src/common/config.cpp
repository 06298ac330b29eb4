#include "bevdrive/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bevdrive {

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

std::string Config::get_str(const std::string& key, const std::string& def) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double Config::get_double(const std::string& key, double def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
  }
}

int64_t Config::get_int(const std::string& key, int64_t def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not an integer: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key '" + key + "': not a boolean: " + v);
}

}  // namespace bevdrive
