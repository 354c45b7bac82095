#include "still/simnode/node.hpp"

#include "still/core/error.hpp"

#include <algorithm>
#include <limits>

namespace still::simnode {

namespace {

constexpr Sats kMaxMoney = 21'000'000 * kSatsPerCoin;

} // namespace

SimNode::SimNode(SimNodeOptions options) : options_(std::move(options))
{
    if (!options_.clock) options_.clock = ManualClock().clock();
    if (options_.miner_address.empty()) {
        miner_script_ = {0x6a}; // OP_RETURN: nobody can spend it
    } else {
        miner_script_ = chain::script_for_address(options_.miner_address, options_.network);
    }
    Block genesis;
    ByteWriter w;
    w.str8("still simnode genesis");
    w.u64(options_.seed);
    genesis.hash = crypto::sha256d(w.buffer());
    chain_.push_back(std::move(genesis));
}

Timestamp SimNode::now() const
{
    return options_.clock();
}

payments::ChainEvent SimNode::event(decltype(payments::ChainEvent::kind) kind) const
{
    return payments::ChainEvent{std::move(kind), options_.clock()};
}

void SimNode::subscribe(Handler handler)
{
    std::lock_guard lk(mutex_);
    handlers_.push_back(std::move(handler));
}

void SimNode::watch(const std::string& address)
{
    std::lock_guard lk(mutex_);
    watched_.insert(address);
}

std::set<std::string> SimNode::watched() const
{
    std::lock_guard lk(mutex_);
    return watched_;
}

void SimNode::set_sig_check(SigCheck check)
{
    std::lock_guard lk(mutex_);
    options_.sig_check = check;
}

void SimNode::emit(Pending& pending)
{
    std::vector<Handler> handlers;
    {
        std::lock_guard lk(mutex_);
        handlers = handlers_;
    }
    for (const auto& e : pending.events)
        for (const auto& h : handlers) h(e);
    pending.events.clear();
}

std::optional<UtxoEntry> SimNode::lookup_output(const chain::OutPoint& op) const
{
    if (auto it = utxos_.find(op); it != utxos_.end()) return it->second;
    if (auto it = mempool_.find(op.txid); it != mempool_.end() && op.vout < it->second.outputs.size()) {
        const auto& out = it->second.outputs[op.vout];
        return UtxoEntry{out.value, out.script_pubkey, 0, false};
    }
    return std::nullopt;
}

std::optional<std::string> SimNode::check_tx(const chain::Transaction& tx, Sats& fee,
                                             std::vector<chain::Txid>& conflicts) const
{
    if (tx.is_coinbase()) return "coinbase transactions cannot be broadcast";
    if (tx.inputs.empty() || tx.outputs.empty()) return "transaction has no inputs or no outputs";
    auto txid = tx.txid();
    if (mempool_.count(txid)) return "already in mempool";
    if (tx_heights_.count(txid)) return "already confirmed";

    std::set<chain::OutPoint> seen;
    for (const auto& in : tx.inputs)
        if (!seen.insert(in.prevout).second) return "duplicate input";

    Sats out_total = 0;
    for (const auto& out : tx.outputs) {
        if (out.value < 0 || out.value > kMaxMoney) return "value overflow";
        out_total += out.value;
        if (out_total > kMaxMoney) return "value overflow";
    }

    Sats in_total = 0;
    for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
        const auto& op = tx.inputs[i].prevout;
        auto entry = lookup_output(op);
        if (!entry) return "missing input";
        if (auto it = mempool_spends_.find(op); it != mempool_spends_.end()) {
            if (std::find(conflicts.begin(), conflicts.end(), it->second) == conflicts.end())
                conflicts.push_back(it->second);
        }
        in_total += entry->value;
        if (in_total > kMaxMoney) return "value overflow";
        if (options_.sig_check == SigCheck::full && !chain::verify_p2pkh_input(tx, i, entry->script_pubkey))
            return "signature check failed";
    }
    if (out_total > in_total) return "outputs exceed inputs";
    fee = in_total - out_total;
    return std::nullopt;
}

void SimNode::add_to_mempool(const chain::Transaction& tx)
{
    auto txid = tx.txid();
    Sats in_total = 0;
    for (const auto& in : tx.inputs) {
        in_total += lookup_output(in.prevout)->value;
        mempool_spends_[in.prevout] = txid;
    }
    mempool_fees_[txid] = in_total - tx.total_out();
    mempool_.emplace(txid, tx);
    mempool_order_.push_back(txid);
    known_[txid] = tx;
}

void SimNode::remove_from_mempool(const chain::Txid& txid)
{
    auto it = mempool_.find(txid);
    if (it == mempool_.end()) return;
    for (const auto& in : it->second.inputs) {
        auto sp = mempool_spends_.find(in.prevout);
        if (sp != mempool_spends_.end() && sp->second == txid) mempool_spends_.erase(sp);
    }
    mempool_.erase(it);
    mempool_fees_.erase(txid);
    mempool_order_.erase(std::remove(mempool_order_.begin(), mempool_order_.end(), txid), mempool_order_.end());
}

void SimNode::evict_with_descendants(const chain::Txid& txid, const chain::Txid& winner, Pending& out)
{
    auto it = mempool_.find(txid);
    if (it == mempool_.end()) return;
    std::vector<chain::Txid> children;
    for (std::uint32_t v = 0; v < it->second.outputs.size(); ++v)
        if (auto sp = mempool_spends_.find({txid, v}); sp != mempool_spends_.end()) children.push_back(sp->second);
    remove_from_mempool(txid);
    out.events.push_back(event(payments::Conflict{txid, winner}));
    for (const auto& c : children) evict_with_descendants(c, winner, out);
}

BroadcastResult SimNode::submit(const chain::Transaction& tx)
{
    Pending pending;
    BroadcastResult r;
    r.txid = tx.txid();
    {
        std::lock_guard lk(mutex_);
        Sats fee = 0;
        if (auto reason = check_tx(tx, fee, r.conflicts_with)) {
            r.reason = *reason;
            r.conflicts_with.clear();
            return r;
        }
        if (!r.conflicts_with.empty()) {
            r.reason = "conflicts with a mempool transaction";
            if (!side_.count(r.txid)) {
                side_.emplace(r.txid, tx);
                side_fees_[r.txid] = fee;
                side_order_.push_back(r.txid);
            }
            known_[r.txid] = tx;
            for (const auto& c : r.conflicts_with) pending.events.push_back(event(payments::Conflict{c, r.txid}));
        } else {
            add_to_mempool(tx);
            announced_.insert(r.txid);
            pending.events.push_back(event(payments::TxSeen{tx, 0}));
            r.accepted = true;
        }
    }
    emit(pending);
    return r;
}

chain::Txid SimNode::broadcast(const chain::Transaction& tx)
{
    auto r = submit(tx);
    if (!r.accepted) throw Error(Errc::tx_rejected, "transaction rejected: " + r.reason);
    return r.txid;
}

chain::Transaction SimNode::make_coinbase(std::int64_t height)
{
    chain::Transaction cb;
    chain::TxIn in;
    in.prevout.vout = 0xffffffff;
    ByteWriter w;
    w.u64(static_cast<std::uint64_t>(height));
    w.u64(++block_counter_);
    w.u64(options_.seed);
    in.script_sig = w.take();
    cb.inputs.push_back(std::move(in));
    cb.outputs.push_back({options_.subsidy, miner_script_});
    return cb;
}

std::int64_t SimNode::connect_block(std::vector<chain::Transaction> txs, Pending& out)
{
    // Dry run against an overlay so a bad block changes nothing.
    std::map<chain::OutPoint, UtxoEntry> created;
    std::set<chain::OutPoint> spent;
    std::int64_t height = static_cast<std::int64_t>(chain_.size());
    Sats fees = 0;
    std::set<chain::Txid> ids;
    for (const auto& tx : txs) {
        if (tx.is_coinbase()) throw Error(Errc::invalid_argument, "block transactions may not be coinbases");
        auto txid = tx.txid();
        if (!ids.insert(txid).second || tx_heights_.count(txid))
            throw Error(Errc::invalid_argument, "block repeats a transaction");
        Sats in_total = 0;
        for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
            const auto& op = tx.inputs[i].prevout;
            if (spent.count(op)) throw Error(Errc::invalid_argument, "block spends an output twice");
            UtxoEntry entry;
            if (auto it = created.find(op); it != created.end()) {
                entry = it->second;
            } else if (auto jt = utxos_.find(op); jt != utxos_.end()) {
                entry = jt->second;
            } else {
                throw Error(Errc::invalid_argument, "block spends a missing output");
            }
            if (options_.sig_check == SigCheck::full && !chain::verify_p2pkh_input(tx, i, entry.script_pubkey))
                throw Error(Errc::invalid_argument, "block contains an invalid signature");
            spent.insert(op);
            in_total += entry.value;
        }
        if (tx.total_out() > in_total) throw Error(Errc::invalid_argument, "block transaction creates value");
        fees += in_total - tx.total_out();
        for (std::uint32_t v = 0; v < tx.outputs.size(); ++v)
            created[{txid, v}] = UtxoEntry{tx.outputs[v].value, tx.outputs[v].script_pubkey, height, false};
    }

    Block block;
    block.height = height;
    block.parent = chain_.back().hash;
    block.fees = fees;
    block.txs.push_back(make_coinbase(height));
    for (auto& tx : txs) block.txs.push_back(std::move(tx));

    ByteWriter w;
    w.raw(block.parent);
    w.u64(static_cast<std::uint64_t>(height));
    w.u64(block_counter_);
    for (const auto& tx : block.txs) w.raw(tx.txid().bytes);
    block.hash = crypto::sha256d(w.buffer());

    std::vector<chain::Txid> txids;
    std::vector<payments::ChainEvent> fresh;
    for (std::size_t t = 0; t < block.txs.size(); ++t) {
        const auto& tx = block.txs[t];
        auto txid = tx.txid();
        txids.push_back(txid);
        if (t > 0) {
            for (const auto& in : tx.inputs) {
                auto it = utxos_.find(in.prevout);
                block.spent.emplace_back(in.prevout, it->second);
                utxos_.erase(it);
                // A mempool transaction spending the same output just lost.
                if (auto sp = mempool_spends_.find(in.prevout); sp != mempool_spends_.end() && sp->second != txid)
                    evict_with_descendants(sp->second, txid, out);
            }
        }
        for (std::uint32_t v = 0; v < tx.outputs.size(); ++v)
            utxos_[{txid, v}] = UtxoEntry{tx.outputs[v].value, tx.outputs[v].script_pubkey, height, t == 0};
        tx_heights_[txid] = height;
        known_[txid] = tx;
        remove_from_mempool(txid);
        if (side_.erase(txid)) {
            side_fees_.erase(txid);
            side_order_.erase(std::remove(side_order_.begin(), side_order_.end(), txid), side_order_.end());
        }
        if (t > 0 && announced_.insert(txid).second) fresh.push_back(event(payments::TxSeen{tx, height}));
    }
    for (auto& e : fresh) out.events.push_back(std::move(e));
    out.events.push_back(event(payments::BlockMined{height, block.hash, txids}));
    chain_.push_back(std::move(block));

    // Parked transactions whose inputs are gone can never confirm.
    for (auto it = side_order_.begin(); it != side_order_.end();) {
        const auto& tx = side_.at(*it);
        bool dead = std::any_of(tx.inputs.begin(), tx.inputs.end(),
                                [&](const chain::TxIn& in) { return !lookup_output(in.prevout); });
        if (dead) {
            side_.erase(*it);
            side_fees_.erase(*it);
            it = side_order_.erase(it);
        } else {
            ++it;
        }
    }
    return height;
}

std::int64_t SimNode::mine_block()
{
    Pending pending;
    std::int64_t height;
    {
        std::lock_guard lk(mutex_);
        // Parked double spends that outbid everything they conflict with
        // displace those transactions.
        for (auto id : std::vector<chain::Txid>(side_order_)) {
            if (!side_.count(id)) continue;
            const auto tx = side_.at(id);
            Sats fee = 0;
            std::vector<chain::Txid> conflicts;
            auto saved = options_.sig_check;
            options_.sig_check = SigCheck::permissive; // signatures were checked on submit
            auto reason = check_tx(tx, fee, conflicts);
            options_.sig_check = saved;
            if (reason) continue;
            Sats rival = 0;
            for (const auto& c : conflicts) rival += mempool_fees_.at(c);
            if (fee <= rival) continue;
            for (const auto& c : conflicts) evict_with_descendants(c, id, pending);
            side_.erase(id);
            side_fees_.erase(id);
            side_order_.erase(std::remove(side_order_.begin(), side_order_.end(), id), side_order_.end());
            add_to_mempool(tx);
        }
        std::vector<chain::Transaction> txs;
        for (const auto& id : mempool_order_) txs.push_back(mempool_.at(id));
        height = connect_block(std::move(txs), pending);
    }
    emit(pending);
    return height;
}

std::int64_t SimNode::mine_block(const std::vector<chain::Txid>& include)
{
    Pending pending;
    std::int64_t height;
    {
        std::lock_guard lk(mutex_);
        std::set<chain::Txid> selected(include.begin(), include.end());
        std::set<chain::OutPoint> spent;
        for (const auto& id : include) {
            const chain::Transaction* tx = nullptr;
            if (auto it = mempool_.find(id); it != mempool_.end()) tx = &it->second;
            if (auto it = side_.find(id); it != side_.end()) tx = &it->second;
            if (!tx) throw Error(Errc::invalid_argument, "selected transaction is not pending");
            for (const auto& in : tx->inputs) {
                if (!spent.insert(in.prevout).second)
                    throw Error(Errc::invalid_argument, "selection includes conflicting transactions");
                if (mempool_.count(in.prevout.txid) && !selected.count(in.prevout.txid))
                    throw Error(Errc::invalid_argument, "selection omits a parent transaction");
            }
        }
        // Order: selected mempool transactions in mempool order, then
        // selected parked ones.
        std::vector<chain::Transaction> txs;
        for (const auto& id : mempool_order_)
            if (selected.count(id)) txs.push_back(mempool_.at(id));
        for (const auto& id : side_order_)
            if (selected.count(id)) txs.push_back(side_.at(id));
        height = connect_block(std::move(txs), pending);
    }
    emit(pending);
    return height;
}

std::int64_t SimNode::mine(int count)
{
    std::int64_t h = tip_height();
    for (int i = 0; i < count; ++i) h = mine_block();
    return h;
}

void SimNode::disconnect_tip()
{
    Block block = std::move(chain_.back());
    chain_.pop_back();
    // Restore first, then erase: outputs created and spent inside the
    // block must not come back.
    for (auto& [op, entry] : block.spent) utxos_[op] = entry;
    for (const auto& tx : block.txs) {
        auto txid = tx.txid();
        for (std::uint32_t v = 0; v < tx.outputs.size(); ++v) utxos_.erase({txid, v});
        tx_heights_.erase(txid);
    }
}

std::int64_t SimNode::reorg(std::int64_t depth, const std::vector<std::vector<chain::Transaction>>& replacements)
{
    Pending pending;
    std::int64_t tip;
    {
        std::lock_guard lk(mutex_);
        std::int64_t height = static_cast<std::int64_t>(chain_.size()) - 1;
        if (depth < 0 || depth > height) throw Error(Errc::reorg_too_deep, "reorg depth exceeds chain height");
        if (depth == 0 && replacements.empty()) return height;

        std::vector<chain::Transaction> pool;
        for (std::int64_t h = height - depth + 1; h <= height; ++h)
            for (std::size_t t = 1; t < chain_[h].txs.size(); ++t) pool.push_back(chain_[h].txs[t]);
        for (const auto& id : mempool_order_) pool.push_back(mempool_.at(id));

        auto saved_chain = chain_;
        auto saved_utxos = utxos_;
        auto saved_heights = tx_heights_;
        for (std::int64_t i = 0; i < depth; ++i) disconnect_tip();
        pending.events.push_back(event(payments::Reorg{static_cast<std::int64_t>(chain_.size()) - 1, chain_.back().hash}));

        mempool_.clear();
        mempool_order_.clear();
        mempool_fees_.clear();
        mempool_spends_.clear();

        std::int64_t first_new = static_cast<std::int64_t>(chain_.size());
        try {
            for (const auto& block : replacements) connect_block(block, pending);
        } catch (...) {
            chain_ = std::move(saved_chain);
            utxos_ = std::move(saved_utxos);
            tx_heights_ = std::move(saved_heights);
            for (const auto& tx : pool)
                if (!tx_heights_.count(tx.txid())) add_to_mempool(tx);
            throw;
        }

        // Which replacement transaction spends each output, for blame.
        std::map<chain::OutPoint, chain::Txid> replacement_spends;
        for (auto h = first_new; h < static_cast<std::int64_t>(chain_.size()); ++h)
            for (std::size_t t = 1; t < chain_[h].txs.size(); ++t)
                for (const auto& in : chain_[h].txs[t].inputs) replacement_spends[in.prevout] = chain_[h].txs[t].txid();

        std::unordered_map<chain::Txid, chain::Txid> lost_to;
        for (const auto& tx : pool) {
            auto txid = tx.txid();
            if (tx_heights_.count(txid)) continue; // re-mined by a replacement
            Sats fee = 0;
            std::vector<chain::Txid> conflicts;
            auto saved = options_.sig_check;
            options_.sig_check = SigCheck::permissive;
            auto reason = check_tx(tx, fee, conflicts);
            options_.sig_check = saved;
            if (!reason && conflicts.empty()) {
                add_to_mempool(tx);
                continue;
            }
            chain::Txid winner{};
            for (const auto& in : tx.inputs) {
                if (auto it = replacement_spends.find(in.prevout); it != replacement_spends.end()) {
                    winner = it->second;
                    break;
                }
                if (auto it = lost_to.find(in.prevout.txid); it != lost_to.end()) {
                    winner = it->second;
                    break;
                }
            }
            lost_to[txid] = winner;
            pending.events.push_back(event(payments::Conflict{txid, winner}));
        }
        tip = static_cast<std::int64_t>(chain_.size()) - 1;
    }
    emit(pending);
    return tip;
}

std::int64_t SimNode::tip_height()
{
    std::lock_guard lk(mutex_);
    return static_cast<std::int64_t>(chain_.size()) - 1;
}

crypto::Hash256 SimNode::tip_hash() const
{
    std::lock_guard lk(mutex_);
    return chain_.back().hash;
}

std::int64_t SimNode::confirmations(const chain::Txid& txid)
{
    std::lock_guard lk(mutex_);
    if (auto it = tx_heights_.find(txid); it != tx_heights_.end())
        return static_cast<std::int64_t>(chain_.size()) - it->second;
    if (known_.count(txid)) return 0;
    throw Error(Errc::unknown_tx, "unknown transaction");
}

std::vector<payments::Utxo> SimNode::utxos(const std::string& address)
{
    Bytes script = chain::script_for_address(address, options_.network);
    std::lock_guard lk(mutex_);
    std::vector<payments::Utxo> out;
    for (const auto& [op, entry] : utxos_)
        if (entry.script_pubkey == script && !mempool_spends_.count(op))
            out.push_back({op, entry.value, entry.script_pubkey, entry.height});
    for (const auto& id : mempool_order_) {
        const auto& tx = mempool_.at(id);
        for (std::uint32_t v = 0; v < tx.outputs.size(); ++v)
            if (tx.outputs[v].script_pubkey == script && !mempool_spends_.count({id, v}))
                out.push_back({{id, v}, tx.outputs[v].value, script, 0});
    }
    return out;
}

UtxoSet SimNode::utxo_set() const
{
    std::lock_guard lk(mutex_);
    return utxos_;
}

UtxoSet SimNode::recompute_utxos() const
{
    std::lock_guard lk(mutex_);
    UtxoSet set;
    for (const auto& block : chain_) {
        for (std::size_t t = 0; t < block.txs.size(); ++t) {
            const auto& tx = block.txs[t];
            if (t > 0)
                for (const auto& in : tx.inputs) set.erase(in.prevout);
            auto txid = tx.txid();
            for (std::uint32_t v = 0; v < tx.outputs.size(); ++v)
                set[{txid, v}] = UtxoEntry{tx.outputs[v].value, tx.outputs[v].script_pubkey, block.height, t == 0};
        }
    }
    return set;
}

std::vector<chain::Transaction> SimNode::mempool() const
{
    std::lock_guard lk(mutex_);
    std::vector<chain::Transaction> out;
    for (const auto& id : mempool_order_) out.push_back(mempool_.at(id));
    return out;
}

std::vector<chain::Transaction> SimNode::side_pool() const
{
    std::lock_guard lk(mutex_);
    std::vector<chain::Transaction> out;
    for (const auto& id : side_order_) out.push_back(side_.at(id));
    return out;
}

bool SimNode::in_mempool(const chain::Txid& txid) const
{
    std::lock_guard lk(mutex_);
    return mempool_.count(txid) > 0;
}

std::optional<chain::Transaction> SimNode::find_tx(const chain::Txid& txid) const
{
    std::lock_guard lk(mutex_);
    if (auto it = known_.find(txid); it != known_.end()) return it->second;
    return std::nullopt;
}

std::optional<std::int64_t> SimNode::tx_height(const chain::Txid& txid) const
{
    std::lock_guard lk(mutex_);
    if (auto it = tx_heights_.find(txid); it != tx_heights_.end()) return it->second;
    return std::nullopt;
}

std::vector<Block> SimNode::blocks() const
{
    std::lock_guard lk(mutex_);
    return chain_;
}

Sats SimNode::total_fees() const
{
    std::lock_guard lk(mutex_);
    Sats total = 0;
    for (const auto& b : chain_) total += b.fees;
    return total;
}

Sats SimNode::total_subsidy() const
{
    std::lock_guard lk(mutex_);
    return options_.subsidy * static_cast<Sats>(chain_.size() - 1);
}

Sats SimNode::utxo_total() const
{
    std::lock_guard lk(mutex_);
    Sats total = 0;
    for (const auto& [op, e] : utxos_) total += e.value;
    return total;
}

} // namespace still::simnode
