#include "still/keystore/network.hpp"

#include "still/core/error.hpp"

namespace still::keystore {

namespace {
constexpr Network kMainnet{NetworkTag::mainnet, 0x00, 0x80, 0x0488ADE4, 0x0488B21E};
constexpr Network kTestnet{NetworkTag::testnet, 0x6f, 0xef, 0x04358394, 0x043587CF};
constexpr Network kRegtest{NetworkTag::regtest, 0x6f, 0xef, 0x04358394, 0x043587CF};
} // namespace

const Network& Network::mainnet() { return kMainnet; }
const Network& Network::testnet() { return kTestnet; }
const Network& Network::regtest() { return kRegtest; }

const Network& Network::from_tag(NetworkTag tag)
{
    switch (tag) {
    case NetworkTag::mainnet: return kMainnet;
    case NetworkTag::testnet: return kTestnet;
    case NetworkTag::regtest: return kRegtest;
    }
    throw Error(Errc::invalid_argument, "unknown network tag");
}

const Network& Network::from_name(std::string_view name)
{
    if (name == "mainnet") return kMainnet;
    if (name == "testnet") return kTestnet;
    if (name == "regtest") return kRegtest;
    throw Error(Errc::invalid_argument, "unknown network: " + std::string(name));
}

std::string_view Network::name() const
{
    switch (tag) {
    case NetworkTag::mainnet: return "mainnet";
    case NetworkTag::testnet: return "testnet";
    case NetworkTag::regtest: return "regtest";
    }
    return "unknown";
}

} // namespace still::keystore
