#pragma once

#include <cstdint>
#include <string>

namespace ssft {

// FIPS 180-4 SHA-256, lowercase hex digest.
std::string sha256_hex(const std::string& bytes);

}  // namespace ssft
