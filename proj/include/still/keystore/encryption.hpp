#pragma once

#include "still/core/bytes.hpp"
#include "still/crypto/secp256k1.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace still::keystore {

// scrypt cost. N = 2^log2_n; memory ~ 128 * r * N bytes.
struct KdfCost {
    std::uint8_t log2_n = 15;
    std::uint32_t r = 8;
    std::uint32_t p = 1;
};

struct KdfParams {
    KdfCost cost;
    std::array<std::uint8_t, 16> salt{};
};

// scrypt-derived key, AES-256-GCM. The serialized KDF parameters are bound
// as associated data, so editing them on disk fails authentication.
//
// Serialized layout (little-endian):
//   u8 kdf_id (1 = scrypt) | u8 log2_n | u32 r | u32 p | salt[16]
//   u8 cipher_id (1 = aes-256-gcm) | nonce[12] | u32 len | ciphertext | tag[16]
struct EncryptedBlob {
    KdfParams kdf;
    std::array<std::uint8_t, 12> nonce{};
    Bytes ciphertext;
    std::array<std::uint8_t, 16> auth_tag{};

    Bytes serialize() const;
    // Throws Errc::store_corrupt on malformed input or unsupported ids.
    static EncryptedBlob parse(ByteView data);
};

// Fresh random salt and nonce per call. Throws Errc::empty_passphrase.
EncryptedBlob encrypt_secret(ByteView plaintext, std::string_view passphrase, const KdfCost& cost = {});
// Throws Errc::bad_passphrase when authentication fails.
SecretBytes decrypt_secret(const EncryptedBlob& blob, std::string_view passphrase);

EncryptedBlob encrypt_key(const crypto::PrivateKey& key, std::string_view passphrase, const KdfCost& cost = {});
crypto::PrivateKey decrypt_key(const EncryptedBlob& blob, std::string_view passphrase);

} // namespace still::keystore
