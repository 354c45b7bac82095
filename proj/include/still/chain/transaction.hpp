#pragma once

#include "still/core/bytes.hpp"
#include "still/core/money.hpp"
#include "still/crypto/hash.hpp"
#include "still/crypto/secp256k1.hpp"
#include "still/keystore/network.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace still::chain {

// Transaction id. Stored in internal byte order (raw SHA256d output);
// hex() renders the conventional reversed display order.
struct Txid {
    std::array<std::uint8_t, 32> bytes{};

    std::string hex() const;
    // Display-order hex. Throws Errc::parse_error.
    static Txid from_hex(std::string_view hex);
    auto operator<=>(const Txid&) const = default;
};

struct OutPoint {
    Txid txid;
    std::uint32_t vout = 0;
    auto operator<=>(const OutPoint&) const = default;
};

struct TxIn {
    OutPoint prevout;
    Bytes script_sig;
    std::uint32_t sequence = 0xffffffff;
    bool operator==(const TxIn&) const = default;
};

struct TxOut {
    Sats value = 0;
    Bytes script_pubkey;
    bool operator==(const TxOut&) const = default;
};

// Legacy (pre-segwit) transaction.
struct Transaction {
    std::int32_t version = 1;
    std::vector<TxIn> inputs;
    std::vector<TxOut> outputs;
    std::uint32_t locktime = 0;

    Bytes serialize() const;
    std::string to_hex() const;
    Txid txid() const;
    Sats total_out() const;
    bool is_coinbase() const;

    // Throws Errc::malformed_tx, including on trailing bytes.
    static Transaction parse(ByteView data);
    static Transaction from_hex(std::string_view hex);

    bool operator==(const Transaction&) const = default;
};

constexpr std::uint32_t kSighashAll = 1;

// OP_DUP OP_HASH160 <20> OP_EQUALVERIFY OP_CHECKSIG
Bytes p2pkh_script(const crypto::Hash160& key_hash);
std::optional<crypto::Hash160> p2pkh_hash(ByteView script);
// Throws Errc::invalid_address (bad encoding or wrong network version).
Bytes script_for_address(std::string_view address, const keystore::Network& network);
std::optional<std::string> address_of(ByteView script, const keystore::Network& network);

// Pre-segwit signature hash: every scriptSig blanked, the signed input's
// replaced by `script_code`, hash type appended, SHA256d.
crypto::Hash256 legacy_sighash(const Transaction& tx, std::size_t input, ByteView script_code,
                               std::uint32_t hash_type = kSighashAll);

// scriptSig = <DER sig || SIGHASH_ALL> <compressed pubkey>
void sign_p2pkh_input(Transaction& tx, std::size_t input, const crypto::PrivateKey& key, ByteView prev_script);
// Checks the pubkey hashes to the script's key hash and the signature
// (SIGHASH_ALL only) verifies.
bool verify_p2pkh_input(const Transaction& tx, std::size_t input, ByteView prev_script);

// Size constants for legacy P2PKH fee estimation.
constexpr std::size_t kP2pkhInputSize = 148;
constexpr std::size_t kP2pkhOutputSize = 34;
constexpr std::size_t kTxOverhead = 10;

} // namespace still::chain

template <>
struct std::hash<still::chain::Txid> {
    std::size_t operator()(const still::chain::Txid& t) const noexcept
    {
        std::size_t h = 0;
        for (int i = 0; i < 8; ++i) h = h << 8 | t.bytes[i];
        return h;
    }
};
