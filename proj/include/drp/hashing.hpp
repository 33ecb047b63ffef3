#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace drp {

// Lowercase hex SHA-256 digest (64 characters).
[[nodiscard]] std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit, mixed with a seed. Stable across platforms.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0) noexcept;

}  // namespace drp
