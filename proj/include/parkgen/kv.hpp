#pragma once

// Plain-text "key = value" documents used for configs and the legend file.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "parkgen/error.hpp"

namespace parkgen {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

class KeyValues {
 public:
  KeyValues() = default;

  static KeyValues parse(std::string_view text, const std::string& origin = "<string>") {
    KeyValues kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      require<ConfigError>(eq != std::string::npos, origin, ":", lineno, ": expected 'key = value'");
      auto key = trim(std::string_view(body).substr(0, eq));
      require<ConfigError>(!key.empty(), origin, ":", lineno, ": empty key");
      kv.set(key, trim(std::string_view(body).substr(eq + 1)));
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream f(path);
    require<ConfigError>(static_cast<bool>(f), "cannot open config file '", path, "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  void set(const std::string& key, std::string value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = std::move(value);
  }
  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream oss;
    oss.precision(17);
    oss << value;
    set(key, oss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::vector<std::string>& keys() const { return order_; }

  std::optional<std::string> find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string str(const std::string& key) const {
    auto v = find(key);
    require<ConfigError>(v.has_value(), "missing config key '", key, "'");
    return *v;
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
  }

  template <typename T>
  T get(const std::string& key) const {
    return convert<T>(key, str(key));
  }
  template <typename T>
  T get(const std::string& key, T fallback) const {
    auto v = find(key);
    return v ? convert<T>(key, *v) : fallback;
  }

  std::string dump() const {
    std::ostringstream oss;
    for (const auto& k : order_) oss << k << " = " << values_.at(k) << '\n';
    return oss.str();
  }

  bool operator==(const KeyValues& o) const { return values_ == o.values_; }

 private:
  template <typename T>
  static T convert(const std::string& key, const std::string& raw) {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes") return true;
      if (raw == "false" || raw == "0" || raw == "no") return false;
      fail<ConfigError>("config key '", key, "': expected boolean, got '", raw, "'");
    } else if constexpr (std::is_floating_point_v<T>) {
      try {
        std::size_t pos = 0;
        const double d = std::stod(raw, &pos);
        require<ConfigError>(pos == raw.size(), "trailing characters");
        return static_cast<T>(d);
      } catch (const std::exception&) {
        fail<ConfigError>("config key '", key, "': expected number, got '", raw, "'");
      }
    } else {
      T out{};
      auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), out);
      require<ConfigError>(ec == std::errc{} && p == raw.data() + raw.size(), "config key '", key,
                           "': expected integer, got '", raw, "'");
      return out;
    }
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace parkgen
