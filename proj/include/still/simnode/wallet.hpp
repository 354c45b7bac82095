#pragma once

#include "still/simnode/node.hpp"

#include <string>
#include <utility>
#include <vector>

namespace still::simnode {

// Test wallet with real keys derived from its label, so every transaction
// it builds passes the node's full signature check.
class SimWallet {
public:
    SimWallet(SimNode& node, std::string label);

    const std::string& label() const { return label_; }
    // First receive address.
    std::string address() const;
    std::string fresh_address();
    Sats balance() const;
    bool owns(const std::string& address) const;

    // Signed, not broadcast. Change at or above dust returns to address();
    // smaller change is left to the fee. Throws validation on insufficient
    // funds.
    chain::Transaction pay(const std::vector<std::pair<std::string, Sats>>& outputs, Sats fee);
    // Spends the same inputs as `original` back to a fresh own address,
    // paying `original`'s fee plus `extra_fee`. Throws validation when the
    // wallet does not own the inputs.
    chain::Transaction double_spend(const chain::Transaction& original, Sats extra_fee);

private:
    const crypto::PrivateKey* key_for(const Bytes& script) const;

    SimNode& node_;
    std::string label_;
    std::vector<crypto::PrivateKey> keys_;
    std::vector<std::string> addresses_;
    std::vector<Bytes> scripts_;
};

} // namespace still::simnode
