#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace still::keystore {

enum class NetworkTag : std::uint8_t { mainnet = 0, testnet = 1, regtest = 2 };

// Version bytes for every encoding that differs by network. Regtest shares
// the testnet encodings.
struct Network {
    NetworkTag tag;
    std::uint8_t p2pkh_version;
    std::uint8_t wif_version;
    std::uint32_t xprv_version;
    std::uint32_t xpub_version;

    static const Network& mainnet();
    static const Network& testnet();
    static const Network& regtest();
    static const Network& from_tag(NetworkTag tag);
    // "mainnet" | "testnet" | "regtest"; throws Errc::invalid_argument.
    static const Network& from_name(std::string_view name);

    std::string_view name() const;
    bool operator==(const Network& other) const { return tag == other.tag; }
};

} // namespace still::keystore
