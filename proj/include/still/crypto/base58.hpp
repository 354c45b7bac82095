#pragma once

#include "still/core/bytes.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace still::crypto {

std::string base58_encode(ByteView data);
std::optional<Bytes> base58_decode(std::string_view text);

// payload || first four bytes of SHA256d(payload), base58-encoded.
std::string base58check_encode(ByteView payload);
// Returns the payload without checksum; nullopt on bad alphabet or checksum.
std::optional<Bytes> base58check_decode(std::string_view text);

} // namespace still::crypto
