#pragma once

#include <span>
#include <string>
#include <string_view>

namespace coachlab {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

/// First 16 hex digits of the SHA-256 of the values' IEEE-754 bit patterns,
/// serialised big-endian so the hash does not depend on host byte order.
std::string values_hash(std::span<const double> values);

}  // namespace coachlab
