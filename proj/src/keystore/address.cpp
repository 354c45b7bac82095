#include "still/keystore/address.hpp"

#include "still/core/error.hpp"
#include "still/crypto/base58.hpp"

namespace still::keystore {

std::string encode_address(const crypto::Hash160& hash, std::uint8_t version)
{
    Bytes payload;
    payload.reserve(21);
    payload.push_back(version);
    payload.insert(payload.end(), hash.begin(), hash.end());
    return crypto::base58check_encode(payload);
}

std::string encode_address(const crypto::PublicKey& key, const Network& network)
{
    return encode_address(crypto::hash160(key.view()), network.p2pkh_version);
}

std::string encode_address(ByteView compressed_key, const Network& network)
{
    auto key = crypto::PublicKey::parse(compressed_key);
    if (!key) throw Error(Errc::invalid_key, "not a valid compressed public key");
    return encode_address(*key, network);
}

DecodedAddress decode_address(std::string_view address)
{
    auto payload = crypto::base58check_decode(address);
    if (!payload || payload->size() != 21) throw Error(Errc::invalid_address, "invalid address");
    DecodedAddress out;
    out.version = (*payload)[0];
    std::copy(payload->begin() + 1, payload->end(), out.hash.begin());
    return out;
}

bool is_valid_address(std::string_view address, const Network& network)
{
    auto payload = crypto::base58check_decode(address);
    return payload && payload->size() == 21 && (*payload)[0] == network.p2pkh_version;
}

std::string encode_wif(const crypto::PrivateKey& key, const Network& network)
{
    SecretBytes payload(34);
    payload.data()[0] = network.wif_version;
    std::copy(key.bytes().begin(), key.bytes().end(), payload.data() + 1);
    payload.data()[33] = 0x01;
    return crypto::base58check_encode(payload.view());
}

crypto::PrivateKey decode_wif(std::string_view wif, const Network& network)
{
    auto payload = crypto::base58check_decode(wif);
    if (!payload || payload->size() != 34 || (*payload)[0] != network.wif_version || (*payload)[33] != 0x01)
        throw Error(Errc::invalid_key, "invalid WIF");
    SecretBytes holder(*payload);
    secure_wipe(payload->data(), payload->size());
    auto key = crypto::PrivateKey::from_bytes(holder.view().subspan(1, 32));
    if (!key) throw Error(Errc::invalid_key, "WIF scalar out of range");
    return *key;
}

} // namespace still::keystore
