#pragma once

#include "still/chain/transaction.hpp"
#include "still/core/time.hpp"
#include "still/crypto/hash.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace still::payments {

struct TxSeen {
    chain::Transaction tx;
    std::int64_t block_height = 0; // nonzero when first seen inside a block
};

struct BlockMined {
    std::int64_t height = 0;
    crypto::Hash256 block_hash{};
    std::vector<chain::Txid> txids;
};

struct Conflict {
    chain::Txid txid;
    chain::Txid conflicting_txid;
};

struct Reorg {
    std::int64_t new_height = 0;
    crypto::Hash256 tip_hash{};
};

struct ChainEvent {
    std::variant<TxSeen, BlockMined, Conflict, Reorg> kind;
    Timestamp observed_at = 0;
};

// Identity used to drop duplicate deliveries.
std::string event_key(const ChainEvent& event);
std::string describe(const ChainEvent& event);

struct Utxo {
    chain::OutPoint outpoint;
    Sats value = 0;
    Bytes script_pubkey;
    std::int64_t height = 0; // 0 while unconfirmed
};

// Where chain events come from: the simulator or an explorer client.
// Events for a watched address are delivered at least once; consumers must
// tolerate duplicates.
class ChainSource {
public:
    using Handler = std::function<void(const ChainEvent&)>;
    virtual ~ChainSource() = default;

    virtual void subscribe(Handler handler) = 0;
    virtual void watch(const std::string& address) = 0;
    // Throws Errc::unknown_tx.
    virtual std::int64_t confirmations(const chain::Txid& txid) = 0;
    virtual std::vector<Utxo> utxos(const std::string& address) = 0;
    virtual std::int64_t tip_height() = 0;
    // Throws Errc::tx_rejected.
    virtual chain::Txid broadcast(const chain::Transaction& tx) = 0;
    // Sources that poll do their work here; push sources ignore it.
    virtual void poll() {}
};

} // namespace still::payments
