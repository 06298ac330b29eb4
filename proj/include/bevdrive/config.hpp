#pragma once

#include <map>
#include <optional>
#include <string>

namespace bevdrive {

// Flat key = value configuration. Lines starting with '#' are comments.
// Keys are dotted paths ("ppo.learning_rate"). Values are parsed on demand.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int64_t get_int(const std::string& key, int64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace bevdrive
