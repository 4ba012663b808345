#pragma once

#include <string>

#include <json.hpp>

#include "swarmopt/errors.hpp"
#include "swarmopt/types.hpp"

namespace swarmopt::detail {

using json = nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing key '" + key + "'");
  return *it;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("key '") + key + "': " + e.what());
  }
}

inline Vec3 to_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ParseError(where + ": expected an array of 3 numbers");
  try {
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline Vec3 vec3_or(const json& j, const char* key, const Vec3& fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return to_vec3(*it, key);
}

inline Pose to_pose(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ParseError(where + ": expected [x, y, z, yaw]");
  try {
    return Pose{Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()), j[3].get<double>()};
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline json from_vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace swarmopt::detail
