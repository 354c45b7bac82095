#pragma once

#include "still/core/bytes.hpp"

#include <array>
#include <cstdint>

namespace still::crypto {

using Hash256 = std::array<std::uint8_t, 32>;
using Hash160 = std::array<std::uint8_t, 20>;
using Hash512 = std::array<std::uint8_t, 64>;

Hash256 sha256(ByteView data);
// SHA256(SHA256(data)); transaction ids, Base58Check checksums, sighashes.
Hash256 sha256d(ByteView data);
Hash160 ripemd160(ByteView data);
// RIPEMD160(SHA256(data)); P2PKH key hash.
Hash160 hash160(ByteView data);
Hash256 hmac_sha256(ByteView key, ByteView data);
Hash512 hmac_sha512(ByteView key, ByteView data);

void random_bytes(std::span<std::uint8_t> out);

} // namespace still::crypto
