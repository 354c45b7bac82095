#include "still/simnode/wallet.hpp"

#include "still/core/error.hpp"
#include "still/keystore/address.hpp"

#include <algorithm>

namespace still::simnode {

SimWallet::SimWallet(SimNode& node, std::string label) : node_(node), label_(std::move(label))
{
    fresh_address();
}

std::string SimWallet::fresh_address()
{
    for (std::uint32_t counter = 0;; ++counter) {
        std::string seed = "still-simwallet:" + label_ + ':' + std::to_string(keys_.size()) + ':' +
                           std::to_string(counter);
        auto digest = crypto::sha256(as_bytes(seed));
        if (auto key = crypto::PrivateKey::from_bytes(digest)) {
            auto addr = keystore::encode_address(key->public_key(), node_.network());
            scripts_.push_back(chain::script_for_address(addr, node_.network()));
            addresses_.push_back(addr);
            keys_.push_back(std::move(*key));
            return addresses_.back();
        }
    }
}

std::string SimWallet::address() const
{
    return addresses_.front();
}

bool SimWallet::owns(const std::string& address) const
{
    return std::find(addresses_.begin(), addresses_.end(), address) != addresses_.end();
}

Sats SimWallet::balance() const
{
    Sats total = 0;
    for (const auto& a : addresses_)
        for (const auto& u : node_.utxos(a)) total += u.value;
    return total;
}

const crypto::PrivateKey* SimWallet::key_for(const Bytes& script) const
{
    for (std::size_t i = 0; i < scripts_.size(); ++i)
        if (scripts_[i] == script) return &keys_[i];
    return nullptr;
}

chain::Transaction SimWallet::pay(const std::vector<std::pair<std::string, Sats>>& outputs, Sats fee)
{
    if (fee < 0) throw Error(Errc::validation, "fee must be nonnegative");
    Sats want = fee;
    chain::Transaction tx;
    for (const auto& [addr, value] : outputs) {
        if (value <= 0) throw Error(Errc::validation, "output value must be positive");
        tx.outputs.push_back({value, chain::script_for_address(addr, node_.network())});
        want += value;
    }

    std::vector<payments::Utxo> coins;
    for (const auto& a : addresses_)
        for (auto& u : node_.utxos(a)) coins.push_back(std::move(u));
    std::sort(coins.begin(), coins.end(), [](const auto& x, const auto& y) { return x.outpoint < y.outpoint; });

    Sats have = 0;
    std::vector<payments::Utxo> used;
    for (auto& c : coins) {
        if (have >= want) break;
        have += c.value;
        used.push_back(std::move(c));
    }
    if (have < want) throw Error(Errc::validation, "wallet has insufficient funds");
    for (const auto& u : used) tx.inputs.push_back({u.outpoint, {}, 0xffffffff});
    if (have - want >= kDustLimit) tx.outputs.push_back({have - want, scripts_.front()});
    for (std::size_t i = 0; i < used.size(); ++i) chain::sign_p2pkh_input(tx, i, *key_for(used[i].script_pubkey), used[i].script_pubkey);
    return tx;
}

chain::Transaction SimWallet::double_spend(const chain::Transaction& original, Sats extra_fee)
{
    std::vector<Bytes> prev_scripts;
    Sats in_total = 0;
    for (const auto& in : original.inputs) {
        auto parent = node_.find_tx(in.prevout.txid);
        if (!parent || in.prevout.vout >= parent->outputs.size())
            throw Error(Errc::validation, "inputs of the original transaction are unknown");
        const auto& out = parent->outputs[in.prevout.vout];
        if (!key_for(out.script_pubkey)) throw Error(Errc::validation, "wallet does not own the original inputs");
        prev_scripts.push_back(out.script_pubkey);
        in_total += out.value;
    }
    Sats fee = in_total - original.total_out() + extra_fee;
    if (in_total - fee < kDustLimit) throw Error(Errc::validation, "double spend would leave only dust");

    chain::Transaction tx;
    for (const auto& in : original.inputs) tx.inputs.push_back({in.prevout, {}, 0xffffffff});
    std::string to = fresh_address();
    tx.outputs.push_back({in_total - fee, chain::script_for_address(to, node_.network())});
    for (std::size_t i = 0; i < tx.inputs.size(); ++i)
        chain::sign_p2pkh_input(tx, i, *key_for(prev_scripts[i]), prev_scripts[i]);
    return tx;
}

} // namespace still::simnode
