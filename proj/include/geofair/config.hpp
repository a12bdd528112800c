#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace geofair {

/// Plain-text `key = value` file. `#` starts a comment; blank lines are
/// ignored; later duplicates override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, std::string_view source);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  void set(std::string key, std::string value);

  const std::map<std::string, std::string, std::less<>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace geofair
