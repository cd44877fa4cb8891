#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

namespace toolvisor {

// Argument values live in a closed algebra: string, number, boolean,
// object (map), array (list), and null. JSON covers it exactly; anything
// outside (binary blobs, discarded parses) is rejected at the boundary.
using Value = nlohmann::json;

class ValueError : public std::runtime_error {
 public:
  explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

// Throws ValueError if v (recursively) leaves the closed value algebra.
void require_in_algebra(const Value& v);

// Text form used for entity comparisons: bare text for strings, canonical
// JSON for everything else.
std::string value_text(const Value& v);

}  // namespace toolvisor
