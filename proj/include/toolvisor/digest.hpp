#pragma once

#include <string>
#include <string_view>

namespace toolvisor {

// SHA-256 hex digest of the input bytes (lowercase, 64 chars).
std::string sha256_hex(std::string_view data);

}  // namespace toolvisor
