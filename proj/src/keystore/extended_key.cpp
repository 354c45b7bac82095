#include "still/keystore/extended_key.hpp"

#include "still/core/error.hpp"
#include "still/crypto/base58.hpp"
#include "still/crypto/hash.hpp"

#include <charconv>

namespace still::keystore {

using crypto::PrivateKey;
using crypto::PublicKey;

namespace {

constexpr std::size_t kSerializedSize = 78;

void put_be32(Bytes& out, std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_be32(ByteView b)
{
    return std::uint32_t{b[0]} << 24 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[2]} << 8 | b[3];
}

struct Split {
    crypto::Hash256 left{};
    std::array<std::uint8_t, 32> right{};

    explicit Split(const crypto::Hash512& i)
    {
        std::copy(i.begin(), i.begin() + 32, left.begin());
        std::copy(i.begin() + 32, i.end(), right.begin());
    }
    ~Split() { secure_wipe(left.data(), left.size()); }
};

} // namespace

PublicKey ExtendedKey::public_key() const
{
    if (auto* priv = std::get_if<PrivateKey>(&key)) return priv->public_key();
    return std::get<PublicKey>(key);
}

const PrivateKey& ExtendedKey::private_key() const
{
    if (auto* priv = std::get_if<PrivateKey>(&key)) return *priv;
    throw Error(Errc::watch_only, "no private material");
}

ExtendedKey ExtendedKey::neuter() const
{
    return ExtendedKey{depth, parent_fingerprint, child_number, chain_code, public_key(), network};
}

std::array<std::uint8_t, 4> ExtendedKey::fingerprint() const
{
    auto id = crypto::hash160(public_key().view());
    return {id[0], id[1], id[2], id[3]};
}

Bytes ExtendedKey::serialize() const
{
    const Network& net = Network::from_tag(network);
    Bytes out;
    out.reserve(kSerializedSize);
    put_be32(out, is_private() ? net.xprv_version : net.xpub_version);
    out.push_back(depth);
    out.insert(out.end(), parent_fingerprint.begin(), parent_fingerprint.end());
    put_be32(out, child_number);
    out.insert(out.end(), chain_code.begin(), chain_code.end());
    if (auto* priv = std::get_if<PrivateKey>(&key)) {
        out.push_back(0x00);
        out.insert(out.end(), priv->bytes().begin(), priv->bytes().end());
    } else {
        auto& pub = std::get<PublicKey>(key).bytes();
        out.insert(out.end(), pub.begin(), pub.end());
    }
    return out;
}

std::string ExtendedKey::to_base58() const
{
    Bytes raw = serialize();
    auto text = crypto::base58check_encode(raw);
    secure_wipe(raw.data(), raw.size());
    return text;
}

ExtendedKey ExtendedKey::parse(ByteView raw, NetworkTag as)
{
    if (raw.size() != kSerializedSize) throw Error(Errc::invalid_key, "extended key must be 78 bytes");
    std::uint32_t version = get_be32(raw.subspan(0, 4));
    const Network& net = Network::from_tag(as);
    bool is_priv = version == net.xprv_version;
    if (!is_priv && version != net.xpub_version)
        throw Error(Errc::invalid_key, "extended key version does not match network");

    std::uint8_t depth = raw[4];
    auto fp = to_array<4>(raw.subspan(5, 4));
    std::uint32_t child = get_be32(raw.subspan(9, 4));
    auto chain = to_array<32>(raw.subspan(13, 32));
    ByteView material = raw.subspan(45, 33);

    if (depth == 0 && (child != 0 || fp != std::array<std::uint8_t, 4>{}))
        throw Error(Errc::invalid_key, "depth-0 key with parent data");

    if (is_priv) {
        if (material[0] != 0x00) throw Error(Errc::invalid_key, "private key padding byte");
        auto k = PrivateKey::from_bytes(material.subspan(1));
        if (!k) throw Error(Errc::invalid_key, "private scalar out of range");
        return ExtendedKey{depth, fp, child, chain, *k, as};
    }
    auto p = PublicKey::parse(material);
    if (!p) throw Error(Errc::invalid_key, "invalid public point");
    return ExtendedKey{depth, fp, child, chain, *p, as};
}

ExtendedKey ExtendedKey::from_base58(std::string_view text, NetworkTag as)
{
    auto raw = crypto::base58check_decode(text);
    if (!raw) throw Error(Errc::bad_checksum, "extended key checksum mismatch");
    auto out = parse(*raw, as);
    secure_wipe(raw->data(), raw->size());
    return out;
}

ExtendedKey ExtendedKey::from_base58(std::string_view text)
{
    auto raw = crypto::base58check_decode(text);
    if (!raw) throw Error(Errc::bad_checksum, "extended key checksum mismatch");
    if (raw->size() != kSerializedSize) throw Error(Errc::invalid_key, "extended key must be 78 bytes");
    std::uint32_t version = get_be32(*raw);
    NetworkTag tag = (version == Network::mainnet().xprv_version || version == Network::mainnet().xpub_version)
                         ? NetworkTag::mainnet
                         : NetworkTag::testnet;
    auto out = parse(*raw, tag);
    secure_wipe(raw->data(), raw->size());
    return out;
}

bool ExtendedKey::operator==(const ExtendedKey& other) const
{
    return depth == other.depth && parent_fingerprint == other.parent_fingerprint &&
           child_number == other.child_number && chain_code == other.chain_code && key == other.key &&
           network == other.network;
}

ExtendedKey generate_master(ByteView entropy, const Network& network)
{
    if (entropy.size() < 16 || entropy.size() > 64)
        throw Error(Errc::entropy_out_of_range, "seed entropy must be 16 to 64 bytes");
    Split i(crypto::hmac_sha512(as_bytes("Bitcoin seed"), entropy));
    auto k = PrivateKey::from_bytes(i.left);
    if (!k) throw Error(Errc::invalid_child, "seed produces an invalid master key");
    return ExtendedKey{0, {}, 0, i.right, *k, network.tag};
}

ExtendedKey derive_child(const ExtendedKey& parent, std::uint32_t index, bool hardened)
{
    if (index >= kHardenedBit) throw Error(Errc::invalid_argument, "child index must be below 2^31");
    if (hardened && !parent.is_private())
        throw Error(Errc::hardened_from_public, "hardened derivation requires a private parent");
    if (parent.depth == 0xff) throw Error(Errc::invalid_argument, "maximum depth reached");

    std::uint32_t child_number = hardened ? (index | kHardenedBit) : index;
    SecretBytes data(37);
    if (hardened) {
        data.data()[0] = 0x00;
        auto& k = parent.private_key().bytes();
        std::copy(k.begin(), k.end(), data.data() + 1);
    } else {
        auto pub = parent.public_key().bytes();
        std::copy(pub.begin(), pub.end(), data.data());
    }
    for (int i = 0; i < 4; ++i) data.data()[33 + i] = static_cast<std::uint8_t>(child_number >> (24 - 8 * i));

    Split i(crypto::hmac_sha512(parent.chain_code, data.view()));
    auto fp = parent.fingerprint();
    auto depth = static_cast<std::uint8_t>(parent.depth + 1);

    if (parent.is_private()) {
        auto child = crypto::tweak_add(parent.private_key(), i.left);
        if (!child) throw Error(Errc::invalid_child, "invalid child at index " + std::to_string(index));
        return ExtendedKey{depth, fp, child_number, i.right, *child, parent.network};
    }
    auto child = crypto::tweak_add(std::get<PublicKey>(parent.key), i.left);
    if (!child) throw Error(Errc::invalid_child, "invalid child at index " + std::to_string(index));
    return ExtendedKey{depth, fp, child_number, i.right, *child, parent.network};
}

ExtendedKey derive_path(const ExtendedKey& root, std::string_view path)
{
    if (path.empty() || path[0] != 'm') throw Error(Errc::invalid_argument, "path must start with m");
    ExtendedKey node = root;
    std::size_t pos = 1;
    while (pos < path.size()) {
        if (path[pos] != '/') throw Error(Errc::invalid_argument, "malformed derivation path");
        std::size_t end = path.find('/', pos + 1);
        if (end == std::string_view::npos) end = path.size();
        std::string_view part = path.substr(pos + 1, end - pos - 1);
        bool hardened = false;
        if (!part.empty() && (part.back() == '\'' || part.back() == 'h' || part.back() == 'H')) {
            hardened = true;
            part.remove_suffix(1);
        }
        std::uint32_t index = 0;
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), index);
        if (part.empty() || ec != std::errc{} || p != part.data() + part.size())
            throw Error(Errc::invalid_argument, "malformed derivation path");
        node = derive_child(node, index, hardened);
        pos = end;
    }
    return node;
}

} // namespace still::keystore
