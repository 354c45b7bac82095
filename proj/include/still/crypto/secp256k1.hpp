#pragma once

#include "still/core/bytes.hpp"
#include "still/crypto/hash.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>

namespace still::crypto {

// Compressed secp256k1 point (33 bytes, 0x02/0x03 prefix).
class PublicKey {
public:
    static constexpr std::size_t kSize = 33;

    // nullopt unless `data` is a valid compressed encoding of a curve point.
    static std::optional<PublicKey> parse(ByteView data);

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    ByteView view() const { return bytes_; }

    // ECDSA verification of a DER signature over a 32-byte digest.
    bool verify(const Hash256& digest, ByteView der_signature) const;

    auto operator<=>(const PublicKey&) const = default;

private:
    explicit PublicKey(const std::array<std::uint8_t, kSize>& b) : bytes_(b) {}
    std::array<std::uint8_t, kSize> bytes_{};
};

// Private scalar in [1, n-1]. Wiped on destruction.
class PrivateKey {
public:
    static constexpr std::size_t kSize = 32;

    static std::optional<PrivateKey> from_bytes(ByteView scalar);
    static PrivateKey generate();

    PrivateKey(const PrivateKey&) = default;
    PrivateKey& operator=(const PrivateKey&) = default;
    ~PrivateKey();

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    PublicKey public_key() const;

    // DER-encoded, low-S normalized ECDSA signature.
    Bytes sign(const Hash256& digest) const;

    bool operator==(const PrivateKey&) const = default;

private:
    explicit PrivateKey(const std::array<std::uint8_t, kSize>& b) : bytes_(b) {}
    std::array<std::uint8_t, kSize> bytes_{};
};

// (key + tweak) mod n; nullopt if tweak >= n or the sum is zero.
std::optional<PrivateKey> tweak_add(const PrivateKey& key, const Hash256& tweak);
// tweak*G + key; nullopt if tweak >= n or the sum is the point at infinity.
std::optional<PublicKey> tweak_add(const PublicKey& key, const Hash256& tweak);

} // namespace still::crypto
