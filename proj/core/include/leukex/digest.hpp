#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace leukex {

inline constexpr std::string_view kDigestAlgorithm = "sha256";

/// Lowercase hex SHA-256 of a byte sequence.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

}  // namespace leukex
