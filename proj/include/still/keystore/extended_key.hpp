#pragma once

#include "still/core/bytes.hpp"
#include "still/crypto/secp256k1.hpp"
#include "still/keystore/network.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace still::keystore {

constexpr std::uint32_t kHardenedBit = 0x80000000u;

// BIP32 node: chain code plus either a private scalar or a compressed public
// point, with the metadata needed for the 78-byte serialization.
struct ExtendedKey {
    std::uint8_t depth = 0;
    std::array<std::uint8_t, 4> parent_fingerprint{};
    std::uint32_t child_number = 0;
    std::array<std::uint8_t, 32> chain_code{};
    std::variant<crypto::PrivateKey, crypto::PublicKey> key;
    NetworkTag network = NetworkTag::mainnet;

    bool is_private() const { return std::holds_alternative<crypto::PrivateKey>(key); }
    crypto::PublicKey public_key() const;
    // Throws Errc::watch_only for a public node.
    const crypto::PrivateKey& private_key() const;

    // Same node with the private scalar dropped.
    ExtendedKey neuter() const;
    // First four bytes of HASH160(public key).
    std::array<std::uint8_t, 4> fingerprint() const;

    // 78-byte BIP32 serialization (no checksum).
    Bytes serialize() const;
    std::string to_base58() const;
    // Accepts xprv/xpub/tprv/tpub; checks checksum, version and the
    // depth/fingerprint/child invariants. `as` picks testnet vs regtest when
    // the version bytes are shared. Throws Errc::bad_checksum or
    // Errc::invalid_key.
    static ExtendedKey parse(ByteView serialized, NetworkTag as);
    static ExtendedKey from_base58(std::string_view text, NetworkTag as);
    static ExtendedKey from_base58(std::string_view text);

    bool operator==(const ExtendedKey& other) const;
};

// Master node from 16..64 bytes of seed entropy (HMAC-SHA512 keyed
// "Bitcoin seed"). Throws Errc::entropy_out_of_range.
ExtendedKey generate_master(ByteView entropy, const Network& network);

// BIP32 CKD. `index` must be below 2^31; `hardened` sets the top bit.
// Throws Errc::hardened_from_public, Errc::invalid_argument, or
// Errc::invalid_child when IL >= n or the child key is zero/infinity.
ExtendedKey derive_child(const ExtendedKey& parent, std::uint32_t index, bool hardened);

// "m/0'/0/5" (apostrophe or h/H for hardened).
ExtendedKey derive_path(const ExtendedKey& root, std::string_view path);

} // namespace still::keystore
