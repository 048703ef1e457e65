#pragma once

#include <cmath>
#include <string>

#include "json.hpp"

namespace keyminer {

// Every document leaves the engine in one dialect: object keys sorted,
// no insignificant whitespace, shortest round-trip numbers.
inline std::string canonical_dump(const nlohmann::json& j) { return j.dump(); }

// Infinite bounds are written as null.
inline nlohmann::json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

inline double bound_from_json(const nlohmann::json& j, double when_null) {
  if (j.is_null()) return when_null;
  return j.get<double>();
}

}  // namespace keyminer
