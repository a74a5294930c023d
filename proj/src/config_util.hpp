#pragma once

// JSON access helpers that report problems as ConfigError.

#include <string>

#include "json.hpp"
#include "synlabel/errors.hpp"

namespace synlabel::config {

inline void RequireObject(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

template <typename T>
T Get(const nlohmann::json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
T Require(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

// Rejects keys outside `allowed` so that typos do not pass silently.
inline void AllowKeys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace synlabel::config
