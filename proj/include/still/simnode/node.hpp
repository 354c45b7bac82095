#pragma once

#include "still/chain/transaction.hpp"
#include "still/keystore/network.hpp"
#include "still/payments/events.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace still::simnode {

struct UtxoEntry {
    Sats value = 0;
    Bytes script_pubkey;
    std::int64_t height = 0;
    bool coinbase = false;
    bool operator==(const UtxoEntry&) const = default;
};

using UtxoSet = std::map<chain::OutPoint, UtxoEntry>;

struct Block {
    std::int64_t height = 0;
    crypto::Hash256 hash{};
    crypto::Hash256 parent{};
    std::vector<chain::Transaction> txs; // coinbase first
    Sats fees = 0;
    // Undo data: outputs this block spent.
    std::vector<std::pair<chain::OutPoint, UtxoEntry>> spent;
};

enum class SigCheck { permissive, full };

struct SimNodeOptions {
    keystore::Network network = keystore::Network::regtest();
    SigCheck sig_check = SigCheck::full;
    std::string miner_address; // empty: subsidy pays an unspendable burn script
    Sats subsidy = 50 * kSatsPerCoin;
    std::uint64_t seed = 1;
    // Stamps events; empty means a fixed logical time.
    Clock clock;
};

struct BroadcastResult {
    bool accepted = false;
    chain::Txid txid;
    std::string reason;
    std::vector<chain::Txid> conflicts_with;
};

// Deterministic in-process chain: UTXO set, mempool, blocks with undo data,
// conflicts and reorgs. Fees are not paid to miners; they are burned and
// tracked so that sum(UTXO) + fees == subsidy * blocks always holds.
//
// A transaction that double-spends a mempool transaction is rejected and
// parked in a side pool, and a Conflict event names the transaction it
// fights. At mining time a parked transaction paying a strictly higher fee
// displaces the mempool transactions it conflicts with, which is how a
// double spend ends up confirmed.
//
// Events go to subscribers synchronously on the calling thread, after the
// node's lock is released.
class SimNode : public payments::ChainSource {
public:
    explicit SimNode(SimNodeOptions options = {});

    void subscribe(Handler handler) override;
    void watch(const std::string& address) override;
    std::int64_t confirmations(const chain::Txid& txid) override;
    std::vector<payments::Utxo> utxos(const std::string& address) override;
    std::int64_t tip_height() override;
    chain::Txid broadcast(const chain::Transaction& tx) override;

    BroadcastResult submit(const chain::Transaction& tx);
    // Mines the mempool plus any parked transactions that outbid their
    // conflicts. Returns the new height.
    std::int64_t mine_block();
    // Mines exactly `include` (mempool or side-pool txids). Throws
    // invalid_argument for unknown or mutually conflicting selections.
    std::int64_t mine_block(const std::vector<chain::Txid>& include);
    std::int64_t mine(int count);
    // Detaches `depth` blocks, then connects the replacement blocks (each a
    // list of non-coinbase transactions). Detached transactions return to
    // the mempool unless the replacements conflict them. Throws
    // reorg_too_deep.
    std::int64_t reorg(std::int64_t depth, const std::vector<std::vector<chain::Transaction>>& replacements = {});

    // Inspection.
    UtxoSet utxo_set() const;
    UtxoSet recompute_utxos() const;
    std::vector<chain::Transaction> mempool() const;
    std::vector<chain::Transaction> side_pool() const;
    bool in_mempool(const chain::Txid& txid) const;
    std::optional<chain::Transaction> find_tx(const chain::Txid& txid) const;
    std::optional<std::int64_t> tx_height(const chain::Txid& txid) const;
    std::vector<Block> blocks() const;
    crypto::Hash256 tip_hash() const;
    Sats total_fees() const;
    Sats total_subsidy() const;
    Sats utxo_total() const;
    std::set<std::string> watched() const;
    const keystore::Network& network() const { return options_.network; }
    void set_sig_check(SigCheck check);
    Timestamp now() const;

private:
    struct Pending {
        std::vector<payments::ChainEvent> events;
    };

    // Validation against chain UTXOs plus mempool outputs. Returns the fee
    // or a rejection reason; fills `conflicts` with mempool spenders.
    std::optional<std::string> check_tx(const chain::Transaction& tx, Sats& fee,
                                        std::vector<chain::Txid>& conflicts) const;
    std::optional<UtxoEntry> lookup_output(const chain::OutPoint& op) const;
    void add_to_mempool(const chain::Transaction& tx);
    void remove_from_mempool(const chain::Txid& txid);
    void evict_with_descendants(const chain::Txid& txid, const chain::Txid& winner, Pending& out);
    std::int64_t connect_block(std::vector<chain::Transaction> txs, Pending& out);
    void disconnect_tip();
    chain::Transaction make_coinbase(std::int64_t height);
    void emit(Pending& pending);
    payments::ChainEvent event(decltype(payments::ChainEvent::kind) kind) const;

    SimNodeOptions options_;
    Bytes miner_script_;

    mutable std::mutex mutex_;
    std::vector<Handler> handlers_;
    std::set<std::string> watched_;
    std::vector<Block> chain_;
    UtxoSet utxos_;
    std::unordered_map<chain::Txid, std::int64_t> tx_heights_; // active chain
    std::vector<chain::Txid> mempool_order_;
    std::unordered_map<chain::Txid, chain::Transaction> mempool_;
    std::unordered_map<chain::Txid, Sats> mempool_fees_;
    std::map<chain::OutPoint, chain::Txid> mempool_spends_;
    std::vector<chain::Txid> side_order_;
    std::unordered_map<chain::Txid, chain::Transaction> side_;
    std::unordered_map<chain::Txid, Sats> side_fees_;
    std::unordered_map<chain::Txid, chain::Transaction> known_;
    std::unordered_set<chain::Txid> announced_;
    std::uint64_t block_counter_ = 0;
};

} // namespace still::simnode
