#pragma once

#include "still/core/bytes.hpp"
#include "still/crypto/hash.hpp"
#include "still/crypto/secp256k1.hpp"
#include "still/keystore/network.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace still::keystore {

struct DecodedAddress {
    std::uint8_t version = 0;
    crypto::Hash160 hash{};
};

// Legacy P2PKH: Base58Check(version || HASH160(compressed pubkey)).
std::string encode_address(const crypto::PublicKey& key, const Network& network);
// Validates the 33 bytes as a curve point first; throws Errc::invalid_key.
std::string encode_address(ByteView compressed_key, const Network& network);
std::string encode_address(const crypto::Hash160& hash, std::uint8_t version);

// Throws Errc::invalid_address on bad alphabet, checksum or length.
DecodedAddress decode_address(std::string_view address);
bool is_valid_address(std::string_view address, const Network& network);

// Wallet Import Format, compressed flag set.
std::string encode_wif(const crypto::PrivateKey& key, const Network& network);
// Throws Errc::invalid_key.
crypto::PrivateKey decode_wif(std::string_view wif, const Network& network);

} // namespace still::keystore
