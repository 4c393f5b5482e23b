#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uatrust {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);

// Accepts upper or lower case; whitespace is ignored. Throws std::invalid_argument on odd length
// or non-hex characters.
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

// Fills with bytes from the OpenSSL DRBG.
Bytes random_bytes(std::size_t n);

// Lossy view of arbitrary bytes as UTF-8 text: invalid sequences become U+FFFD.
std::string sanitize_utf8(std::string_view raw);

// Naive substring search, used for scanning captured traffic.
bool contains(ByteView haystack, ByteView needle);

}  // namespace uatrust
